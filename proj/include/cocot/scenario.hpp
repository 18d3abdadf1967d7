#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cocot/engine.hpp"
#include "cocot/model.hpp"

namespace cocot {

/// A scripted dialogue: query, backend script, and the exact messages the
/// engine must produce for the start and for each user turn.
///
/// {"version":1, "query":str, "config":{...}, "script":path|object,
///  "clock_start"?:int, "start":{"expected":[str]},
///  "turns":[{"utterance":str, "expected":[str]}]}
struct Scenario {
    std::string query;
    SessionConfig config;
    ScriptedBackend backend;
    std::int64_t clock_start = 0;
    std::vector<std::string> start_expected;
    struct Turn {
        std::string utterance;
        std::vector<std::string> expected;
    };
    std::vector<Turn> turns;
};

inline Scenario load_scenario(const json& doc, const std::filesystem::path& base_dir = {}) {
    auto fail = [](const std::string& why) { throw Error(ErrorCode::FixtureSchemaError, why); };
    if (!doc.is_object() || doc.empty()) fail("scenario must be a non-empty JSON object");
    if (doc.value("version", 0) != 1) fail("scenario version must be 1");
    if (!doc.contains("query") || !doc["query"].is_string() || trim(doc["query"].get<std::string>()).empty()) {
        fail("scenario needs a non-empty 'query'");
    }
    if (!doc.contains("script")) fail("scenario needs a 'script'");
    if (!doc.contains("start") || !doc["start"].is_object()) fail("scenario needs a 'start' block");
    if (!doc.contains("turns") || !doc["turns"].is_array()) fail("scenario needs a 'turns' array");

    auto strings = [&](const json& arr, const std::string& where) {
        if (!arr.is_array()) fail(where + " must be an array of strings");
        std::vector<std::string> out;
        for (const auto& s : arr) {
            if (!s.is_string()) fail(where + " must be an array of strings");
            out.push_back(s.get<std::string>());
        }
        return out;
    };

    Scenario sc;
    sc.query = doc["query"].get<std::string>();
    try {
        sc.config = config_from_json(doc.value("config", json::object()));
    } catch (const std::exception& e) {
        fail(std::string("bad config: ") + e.what());
    }
    const auto& script = doc["script"];
    if (script.is_string()) {
        sc.backend = load_script_file(base_dir / script.get<std::string>());
    } else {
        sc.backend = load_script(script);
    }
    if (doc.contains("clock_start")) sc.clock_start = doc["clock_start"].get<std::int64_t>();
    sc.start_expected = strings(doc["start"].value("expected", json()), "start.expected");
    std::size_t i = 0;
    for (const auto& t : doc["turns"]) {
        const std::string where = "turns[" + std::to_string(i++) + "]";
        if (!t.is_object() || !t.contains("utterance") || !t["utterance"].is_string()) fail(where + ": missing utterance");
        sc.turns.push_back({t["utterance"].get<std::string>(), strings(t.value("expected", json()), where + ".expected")});
    }
    return sc;
}

inline Scenario load_scenario_file(const std::filesystem::path& path) {
    return load_scenario(read_json_file(path), path.parent_path());
}

struct ScenarioMismatch {
    /// 0 is the session start; k is turns[k-1].
    std::size_t step = 0;
    std::size_t message = 0;
    std::string expected;
    std::string actual;
};

struct ScenarioResult {
    /// Produced messages per step (start first).
    std::vector<std::vector<std::string>> produced;
    std::optional<ScenarioMismatch> mismatch;
    Session session;
    std::chrono::microseconds elapsed{0};

    [[nodiscard]] bool passed() const { return !mismatch; }
};

namespace detail {

inline std::optional<ScenarioMismatch> compare(std::size_t step, const std::vector<std::string>& expected,
                                               const std::vector<std::string>& actual) {
    const std::size_t n = std::max(expected.size(), actual.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::string e = i < expected.size() ? expected[i] : "<no message>";
        const std::string a = i < actual.size() ? actual[i] : "<no message>";
        if (i >= expected.size() || i >= actual.size() || e != a) return ScenarioMismatch{step, i, e, a};
    }
    return std::nullopt;
}

}  // namespace detail

/// Replay every turn; the first divergent message is reported, the replay
/// still runs to the end so the full transcript is available.
inline ScenarioResult run_scenario(Scenario scenario) {
    const auto t0 = std::chrono::steady_clock::now();
    std::int64_t tick = scenario.clock_start;
    EngineOptions opts;
    opts.clock = [&tick] { return tick += 1000; };

    ScenarioResult result;
    auto outcome = start_session(scenario.query, scenario.config, scenario.backend, opts);
    result.produced.push_back(outcome.messages);
    result.mismatch = detail::compare(0, scenario.start_expected, outcome.messages);
    Session session = std::move(outcome.session);
    for (std::size_t i = 0; i < scenario.turns.size(); ++i) {
        auto next = handle_utterance(session, scenario.turns[i].utterance, scenario.backend, opts);
        result.produced.push_back(next.messages);
        if (!result.mismatch) result.mismatch = detail::compare(i + 1, scenario.turns[i].expected, next.messages);
        session = std::move(next.session);
    }
    result.session = std::move(session);
    result.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0);
    return result;
}

}  // namespace cocot
