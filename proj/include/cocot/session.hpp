#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cocot/adaptation.hpp"
#include "cocot/chain.hpp"
#include "cocot/lifecycle.hpp"
#include "cocot/safeguards.hpp"

namespace cocot {

struct SessionConfig {
    int candidates = 3;
    double alpha = 0.3;
    double theta = 0.25;
    double temperature = 0.7;
    Scope default_scope = Scope::Cascade;
    std::string endpoint;
    std::optional<std::int64_t> seed;
    /// Opt-in persistent preference profile; empty keeps preferences per session.
    std::string profile;

    bool operator==(const SessionConfig&) const = default;
};

enum class EventKind { Utterance, ModelOutput, Disclosure, Message, Warning, StateChange, Edit };

inline std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::Utterance: return "utterance";
        case EventKind::ModelOutput: return "model_output";
        case EventKind::Disclosure: return "disclosure";
        case EventKind::Message: return "message";
        case EventKind::Warning: return "warning";
        case EventKind::StateChange: return "state_change";
        case EventKind::Edit: return "edit";
    }
    return "message";
}

inline EventKind event_kind_from_string(std::string_view s) {
    for (auto k : {EventKind::Utterance, EventKind::ModelOutput, EventKind::Disclosure, EventKind::Message,
                   EventKind::Warning, EventKind::StateChange, EventKind::Edit}) {
        if (to_string(k) == s) return k;
    }
    throw Error(ErrorCode::Precondition, "unknown event kind '" + std::string(s) + "'");
}

struct TranscriptEvent {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::Message;
    nlohmann::json payload;

    bool operator==(const TranscriptEvent&) const = default;
};

/// Append-only, sequence-numbered event list.
class Transcript {
public:
    const TranscriptEvent& append(EventKind kind, nlohmann::json payload) {
        events_.push_back({events_.size() + 1, kind, std::move(payload)});
        return events_.back();
    }

    [[nodiscard]] const std::vector<TranscriptEvent>& events() const { return events_; }
    [[nodiscard]] std::size_t size() const { return events_.size(); }

    [[nodiscard]] std::size_t count(EventKind kind) const {
        std::size_t n = 0;
        for (const auto& e : events_) n += e.kind == kind ? 1 : 0;
        return n;
    }

    static Transcript from_events(std::vector<TranscriptEvent> events) {
        for (std::size_t i = 0; i < events.size(); ++i) {
            if (events[i].seq != i + 1) throw Error(ErrorCode::Precondition, "transcript sequence has a gap");
        }
        Transcript t;
        t.events_ = std::move(events);
        return t;
    }

    bool operator==(const Transcript&) const = default;

private:
    std::vector<TranscriptEvent> events_;
};

/// One structural command applied by the user.
struct AppliedEdit {
    int turn = 0;
    std::string utterance;
    std::string summary;
    bool operator==(const AppliedEdit&) const = default;
};

struct FinalAnswer {
    std::string text;
    ReasoningChain chain_snapshot;
    Disclosure disclosure;
    bool operator==(const FinalAnswer&) const = default;
};

/// Something the engine asked the user to confirm on the next utterance.
struct PendingAction {
    enum class Kind { PiiOverride, ForwardFreeform };
    Kind kind = Kind::PiiOverride;
    std::string utterance;
    bool operator==(const PendingAction&) const = default;
};

class Session {
public:
    Session() = default;
    Session(std::string id, std::string query, SessionConfig config)
        : id(std::move(id)), config(std::move(config)), query_(std::move(query)) {}

    [[nodiscard]] const std::string& query() const { return query_; }

    std::string id;
    SessionConfig config;
    ReasoningChain chain;
    SessionState state = SessionState::Created;
    Transcript transcript;
    EditLog edit_log;
    PreferenceVector preference;
    std::vector<AppliedEdit> history;
    std::optional<FinalAnswer> final_answer;
    std::optional<PendingAction> pending;
    /// Structural commands applied so far.
    int edit_count = 0;

    bool operator==(const Session&) const = default;

private:
    std::string query_;
};

}  // namespace cocot
