#pragma once

#include <array>
#include <string>
#include <string_view>

#include "cocot/error.hpp"

namespace cocot {

enum class SessionState { Created, Drafting, AwaitingReview, Regenerating, Finalizing, Done, Failed };

enum class SessionEvent { Start, DraftReady, EditApplied, RegenDone, Confirm, AnswerReady, FatalError };

inline constexpr std::array<SessionState, 7> kAllStates = {
    SessionState::Created,      SessionState::Drafting,   SessionState::AwaitingReview, SessionState::Regenerating,
    SessionState::Finalizing,   SessionState::Done,       SessionState::Failed};

inline constexpr std::array<SessionEvent, 7> kAllEvents = {
    SessionEvent::Start,   SessionEvent::DraftReady,  SessionEvent::EditApplied, SessionEvent::RegenDone,
    SessionEvent::Confirm, SessionEvent::AnswerReady, SessionEvent::FatalError};

inline std::string_view to_string(SessionState s) {
    switch (s) {
        case SessionState::Created: return "Created";
        case SessionState::Drafting: return "Drafting";
        case SessionState::AwaitingReview: return "AwaitingReview";
        case SessionState::Regenerating: return "Regenerating";
        case SessionState::Finalizing: return "Finalizing";
        case SessionState::Done: return "Done";
        case SessionState::Failed: return "Failed";
    }
    return "Failed";
}

inline std::string_view to_string(SessionEvent e) {
    switch (e) {
        case SessionEvent::Start: return "Start";
        case SessionEvent::DraftReady: return "DraftReady";
        case SessionEvent::EditApplied: return "EditApplied";
        case SessionEvent::RegenDone: return "RegenDone";
        case SessionEvent::Confirm: return "Confirm";
        case SessionEvent::AnswerReady: return "AnswerReady";
        case SessionEvent::FatalError: return "FatalError";
    }
    return "FatalError";
}

inline SessionState session_state_from_string(std::string_view s) {
    for (auto st : kAllStates) {
        if (to_string(st) == s) return st;
    }
    throw Error(ErrorCode::Precondition, "unknown session state '" + std::string(s) + "'");
}

/// The session lifecycle. Finalizing is entered only from AwaitingReview on
/// Confirm, and Done only from Finalizing.
inline SessionState transition(SessionState state, SessionEvent event) {
    using S = SessionState;
    using E = SessionEvent;
    if (event == E::FatalError) return S::Failed;
    switch (state) {
        case S::Created:
            if (event == E::Start) return S::Drafting;
            break;
        case S::Drafting:
            if (event == E::DraftReady) return S::AwaitingReview;
            break;
        case S::AwaitingReview:
            if (event == E::EditApplied) return S::Regenerating;
            if (event == E::Confirm) return S::Finalizing;
            break;
        case S::Regenerating:
            if (event == E::RegenDone) return S::AwaitingReview;
            break;
        case S::Finalizing:
            if (event == E::AnswerReady) return S::Done;
            break;
        case S::Done:
        case S::Failed:
            break;
    }
    throw Error(ErrorCode::IllegalTransition,
                std::string(to_string(event)) + " is not allowed in state " + std::string(to_string(state)));
}

}  // namespace cocot
