#pragma once

#include <span>
#include <string>
#include <vector>

#include "cocot/protocol.hpp"
#include "cocot/safeguards.hpp"
#include "cocot/session.hpp"

namespace cocot {

/// "Step 5", "Steps 3 and 4", "Steps 5, 6, 7, 8 and 9".
inline std::string format_step_list(std::span<const int> ordinals) {
    if (ordinals.empty()) return "no steps";
    if (ordinals.size() == 1) return "Step " + std::to_string(ordinals[0]);
    std::string out = "Steps ";
    for (std::size_t i = 0; i < ordinals.size(); ++i) {
        if (i > 0) out += (i + 1 == ordinals.size()) ? " and " : ", ";
        out += std::to_string(ordinals[i]);
    }
    return out;
}

inline std::vector<int> stale_ordinals(const ReasoningChain& chain) {
    std::vector<int> out;
    for (const auto& s : chain.steps()) {
        if (s.status == StepStatus::Stale) out.push_back(s.ordinal);
    }
    return out;
}

namespace detail {

inline SessionState required_state(PromptPurpose purpose) {
    switch (purpose) {
        case PromptPurpose::InitialDraft: return SessionState::Drafting;
        case PromptPurpose::RegenerateStale: return SessionState::Regenerating;
        case PromptPurpose::FinalAnswer: return SessionState::Finalizing;
        case PromptPurpose::BiasAudit: return SessionState::AwaitingReview;
    }
    return SessionState::Drafting;
}

inline constexpr std::size_t kRecentUtterances = 3;

}  // namespace detail

/// Assemble the prompt for one model call. `focus` names the stale ordinals
/// to regenerate (defaults to every stale step) or the single step to audit.
inline PromptBundle render_prompt(const Session& session, PromptPurpose purpose,
                                  const std::vector<std::string>& directives, std::vector<int> focus = {}) {
    if (session.state != detail::required_state(purpose)) {
        throw Error(ErrorCode::PurposeStateMismatch, std::string(to_string(purpose)) + " is not valid in state " +
                                                         std::string(to_string(session.state)));
    }
    PromptBundle b;
    b.system = std::string(kSystemPrompt);
    b.directives = directives;
    b.purpose = purpose;
    b.turn = session.edit_count;

    b.context = "User query: " + session.query();
    if (!session.chain.empty()) b.context += "\n\nCurrent reasoning chain:\n" + render_chain(session.chain);

    std::vector<std::string> recent;
    const auto& events = session.transcript.events();
    for (auto it = events.rbegin(); it != events.rend() && recent.size() < detail::kRecentUtterances; ++it) {
        if (it->kind == EventKind::Utterance) recent.push_back(it->payload.at("text").get<std::string>());
    }
    if (!recent.empty()) {
        b.context += "\n\nRecent user messages (most recent last):";
        for (auto it = recent.rbegin(); it != recent.rend(); ++it) b.context += "\n- " + *it;
    }

    switch (purpose) {
        case PromptPurpose::InitialDraft:
            b.instruction =
                "Generate a clear, step-by-step reasoning chain for the user query. "
                "Label each step with [Step 1], [Step 2], etc.";
            break;
        case PromptPurpose::RegenerateStale:
            if (focus.empty()) focus = stale_ordinals(session.chain);
            if (focus.empty()) throw Error(ErrorCode::Precondition, "no stale steps to regenerate");
            b.instruction = "The user changed the reasoning chain. Regenerate only " + format_step_list(focus) +
                            ", which logically depend on that change. Re-emit each regenerated step with its "
                            "original [Step N] label and do not output or modify any other step.";
            b.focus = focus;
            break;
        case PromptPurpose::FinalAnswer:
            b.instruction =
                "The user confirmed the reasoning chain. Generate the final answer based strictly on the most "
                "recent version of the reasoning chain.";
            break;
        case PromptPurpose::BiasAudit:
            if (focus.size() != 1) throw Error(ErrorCode::Precondition, "bias audit needs exactly one step");
            b.instruction = build_bias_prompt(session.chain.at_ordinal(focus[0]));
            b.focus = focus;
            break;
    }
    return b;
}

}  // namespace cocot
