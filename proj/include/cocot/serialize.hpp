#pragma once

#include <string>

#include <json.hpp>

#include "cocot/session.hpp"

namespace cocot {

// JSON mapping for the persisted session schema (schema_version 1).

inline std::string_view to_string(Scope s) { return s == Scope::Cascade ? "Cascade" : "Local"; }

inline Scope scope_from_string(std::string_view s) {
    if (s == "Cascade") return Scope::Cascade;
    if (s == "Local") return Scope::Local;
    throw Error(ErrorCode::Precondition, "unknown scope '" + std::string(s) + "'");
}

inline StepStatus step_status_from_string(std::string_view s) {
    for (auto v : {StepStatus::Fresh, StepStatus::Stale, StepStatus::UserEdited}) {
        if (to_string(v) == s) return v;
    }
    throw Error(ErrorCode::Precondition, "unknown step status '" + std::string(s) + "'");
}

inline Provenance provenance_from_string(std::string_view s) {
    if (s == "ModelGenerated") return Provenance::ModelGenerated;
    if (s == "UserAuthored") return Provenance::UserAuthored;
    throw Error(ErrorCode::Precondition, "unknown provenance '" + std::string(s) + "'");
}

inline json to_json(const ReasoningChain& c) {
    json steps = json::array();
    for (const auto& s : c.steps()) {
        steps.push_back({{"id", s.id.value},
                         {"ordinal", s.ordinal},
                         {"text", s.text},
                         {"status", to_string(s.status)},
                         {"provenance", to_string(s.provenance)}});
    }
    json edges = json::array();
    for (const auto& [from, to] : c.graph().edges()) edges.push_back({from.value, to.value});
    return {{"policy", c.policy() == DependencyPolicy::Linear ? "Linear" : "Explicit"},
            {"next_id", c.next_id()},
            {"steps", steps},
            {"edges", edges}};
}

inline ReasoningChain chain_from_json(const json& j) {
    std::vector<ReasoningStep> steps;
    for (const auto& s : j.at("steps")) {
        ReasoningStep step;
        step.id = StepId{s.at("id").get<std::uint64_t>()};
        step.ordinal = s.at("ordinal").get<int>();
        step.text = s.at("text").get<std::string>();
        step.status = step_status_from_string(s.at("status").get<std::string>());
        step.provenance = provenance_from_string(s.at("provenance").get<std::string>());
        steps.push_back(std::move(step));
    }
    std::set<DependencyGraph::Edge> edges;
    for (const auto& e : j.at("edges")) {
        edges.insert({StepId{e.at(0).get<std::uint64_t>()}, StepId{e.at(1).get<std::uint64_t>()}});
    }
    const auto policy = j.at("policy").get<std::string>() == "Linear" ? DependencyPolicy::Linear
                                                                       : DependencyPolicy::Explicit;
    return ReasoningChain::from_parts(std::move(steps), std::move(edges), policy, j.at("next_id").get<std::uint64_t>());
}

inline json to_json(const SessionConfig& c) {
    return {{"candidates", c.candidates},
            {"alpha", c.alpha},
            {"theta", c.theta},
            {"temperature", c.temperature},
            {"default_scope", to_string(c.default_scope)},
            {"endpoint", c.endpoint},
            {"seed", c.seed ? json(*c.seed) : json(nullptr)},
            {"profile", c.profile}};
}

/// Missing fields keep their defaults, so partial configs (HTTP requests) work.
inline SessionConfig config_from_json(const json& j, SessionConfig c = {}) {
    if (!j.is_object()) return c;
    if (j.contains("candidates")) c.candidates = j["candidates"].get<int>();
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("theta")) c.theta = j["theta"].get<double>();
    if (j.contains("temperature")) c.temperature = j["temperature"].get<double>();
    if (j.contains("default_scope")) c.default_scope = scope_from_string(j["default_scope"].get<std::string>());
    if (j.contains("endpoint")) c.endpoint = j["endpoint"].get<std::string>();
    if (j.contains("seed")) {
        c.seed = j["seed"].is_null() ? std::nullopt : std::optional<std::int64_t>(j["seed"].get<std::int64_t>());
    }
    if (j.contains("profile")) c.profile = j["profile"].get<std::string>();
    if (c.candidates < 1) throw Error(ErrorCode::Precondition, "candidates must be >= 1");
    if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw Error(ErrorCode::Precondition, "alpha must be in (0,1]");
    return c;
}

inline json to_json(const EditRecord& r) {
    return {{"schema", 1},
            {"session_id", r.session_id},
            {"step_id", r.step_id.value},
            {"original", r.original},
            {"revision", r.revision},
            {"timestamp", r.timestamp}};
}

inline EditRecord edit_record_from_json(const json& j) {
    if (j.value("schema", 0) != 1) throw Error(ErrorCode::Precondition, "unsupported edit record schema");
    EditRecord r;
    r.session_id = j.at("session_id").get<std::string>();
    r.step_id = StepId{j.at("step_id").get<std::uint64_t>()};
    r.original = j.at("original").get<std::string>();
    r.revision = j.at("revision").get<std::string>();
    r.timestamp = j.at("timestamp").get<std::int64_t>();
    return r;
}

inline json to_json(const PreferenceVector& p) {
    return {{"p", p.p}, {"update_count", p.update_count}, {"alpha", p.alpha}};
}

inline PreferenceVector preference_from_json(const json& j) {
    PreferenceVector p;
    const auto values = j.at("p").get<std::vector<double>>();
    if (values.size() != kFeatureCount) throw Error(ErrorCode::Precondition, "preference vector needs 6 components");
    std::copy(values.begin(), values.end(), p.p.begin());
    p.update_count = j.at("update_count").get<std::uint64_t>();
    p.alpha = j.at("alpha").get<double>();
    return p;
}

inline json to_json(const Disclosure& d) {
    return {{"model_version", d.model_version},
            {"parameters", d.parameters},
            {"confidence", d.confidence ? json(*d.confidence) : json(nullptr)},
            {"rendered", d.rendered}};
}

inline Disclosure disclosure_from_json(const json& j) {
    Disclosure d;
    d.model_version = j.at("model_version").get<std::string>();
    d.parameters = j.at("parameters").get<std::string>();
    if (!j.at("confidence").is_null()) d.confidence = j["confidence"].get<double>();
    d.rendered = j.at("rendered").get<std::string>();
    return d;
}

inline json to_json(const Session& s) {
    json transcript = json::array();
    for (const auto& e : s.transcript.events()) {
        transcript.push_back({{"seq", e.seq}, {"kind", to_string(e.kind)}, {"payload", e.payload}});
    }
    json log = json::array();
    for (const auto& r : s.edit_log.records()) log.push_back(to_json(r));
    json history = json::array();
    for (const auto& h : s.history) {
        history.push_back({{"turn", h.turn}, {"utterance", h.utterance}, {"summary", h.summary}});
    }
    json final_answer = nullptr;
    if (s.final_answer) {
        final_answer = {{"text", s.final_answer->text},
                        {"chain_snapshot", to_json(s.final_answer->chain_snapshot)},
                        {"disclosure", to_json(s.final_answer->disclosure)}};
    }
    json pending = nullptr;
    if (s.pending) {
        pending = {{"kind", s.pending->kind == PendingAction::Kind::PiiOverride ? "PiiOverride" : "ForwardFreeform"},
                   {"utterance", s.pending->utterance}};
    }
    return {{"id", s.id},
            {"query", s.query()},
            {"config", to_json(s.config)},
            {"state", to_string(s.state)},
            {"chain", to_json(s.chain)},
            {"transcript", transcript},
            {"edit_log", log},
            {"preference", to_json(s.preference)},
            {"history", history},
            {"final_answer", final_answer},
            {"pending", pending},
            {"edit_count", s.edit_count}};
}

inline Session session_from_json(const json& j) {
    Session s(j.at("id").get<std::string>(), j.at("query").get<std::string>(), config_from_json(j.at("config")));
    s.state = session_state_from_string(j.at("state").get<std::string>());
    s.chain = chain_from_json(j.at("chain"));
    std::vector<TranscriptEvent> events;
    for (const auto& e : j.at("transcript")) {
        events.push_back({e.at("seq").get<std::uint64_t>(), event_kind_from_string(e.at("kind").get<std::string>()),
                          e.at("payload")});
    }
    s.transcript = Transcript::from_events(std::move(events));
    for (const auto& r : j.at("edit_log")) s.edit_log.append(edit_record_from_json(r));
    s.preference = preference_from_json(j.at("preference"));
    for (const auto& h : j.at("history")) {
        s.history.push_back({h.at("turn").get<int>(), h.at("utterance").get<std::string>(),
                             h.at("summary").get<std::string>()});
    }
    if (const auto& fa = j.at("final_answer"); !fa.is_null()) {
        s.final_answer = FinalAnswer{fa.at("text").get<std::string>(), chain_from_json(fa.at("chain_snapshot")),
                                     disclosure_from_json(fa.at("disclosure"))};
    }
    if (const auto& p = j.at("pending"); !p.is_null()) {
        s.pending = PendingAction{p.at("kind").get<std::string>() == "PiiOverride"
                                      ? PendingAction::Kind::PiiOverride
                                      : PendingAction::Kind::ForwardFreeform,
                                  p.at("utterance").get<std::string>()};
    }
    s.edit_count = j.at("edit_count").get<int>();
    return s;
}

}  // namespace cocot
