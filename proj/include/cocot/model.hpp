#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stop_token>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "cocot/error.hpp"
#include "cocot/protocol.hpp"

namespace cocot {

using json = nlohmann::json;

/// Decoding parameters as sent to (and echoed by) a backend.
using ModelParams = std::map<std::string, json>;

struct ModelMetadata {
    std::string model_version;
    ModelParams parameters;
    std::optional<double> confidence;
    /// Candidates requested but not returned.
    int shortfall = 0;

    bool operator==(const ModelMetadata&) const = default;
};

struct ModelResponse {
    std::vector<std::string> candidates;
    ModelMetadata metadata;
};

class Backend {
public:
    virtual ~Backend() = default;

    /// Request up to n candidates. A stop request observed before the reply is
    /// used raises ErrorCode::Cancelled.
    virtual ModelResponse complete(const PromptBundle& bundle, int n, const ModelParams& params,
                                   std::stop_token stop = {}) = 0;
};

inline void throw_if_cancelled(const std::stop_token& stop) {
    if (stop.stop_requested()) throw Error(ErrorCode::Cancelled, "completion cancelled");
}

/// Deterministic backend replaying fixture entries keyed by
/// (purpose, focus ordinals, turn).
class ScriptedBackend final : public Backend {
public:
    struct Key {
        PromptPurpose purpose = PromptPurpose::InitialDraft;
        std::vector<int> stale;
        int turn = 0;
        auto operator<=>(const Key&) const = default;
    };

    struct Entry {
        std::vector<std::string> candidates;
        std::optional<double> confidence;
    };

    ScriptedBackend() = default;
    ScriptedBackend(std::string model_version, std::map<Key, Entry> entries)
        : model_version_(std::move(model_version)), entries_(std::move(entries)) {}

    ScriptedBackend(const ScriptedBackend& other)
        : model_version_(other.model_version_), entries_(other.entries_), calls_(other.calls_.load()) {}
    ScriptedBackend& operator=(const ScriptedBackend& other) {
        model_version_ = other.model_version_;
        entries_ = other.entries_;
        calls_ = other.calls_.load();
        return *this;
    }

    ModelResponse complete(const PromptBundle& bundle, int n, const ModelParams& params,
                           std::stop_token stop = {}) override {
        if (n < 1) throw Error(ErrorCode::Precondition, "candidate count must be >= 1");
        throw_if_cancelled(stop);
        ++calls_;
        const Key key{bundle.purpose, bundle.focus, bundle.turn};
        const auto it = entries_.find(key);
        if (it == entries_.end()) throw Error(ErrorCode::ScriptMiss, "no fixture entry for " + describe(key));

        ModelResponse out;
        const auto& cands = it->second.candidates;
        const auto take = std::min<std::size_t>(static_cast<std::size_t>(n), cands.size());
        out.candidates.assign(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(take));
        out.metadata.model_version = model_version_;
        out.metadata.parameters = params;
        out.metadata.parameters["n"] = n;
        out.metadata.confidence = it->second.confidence;
        out.metadata.shortfall = n - static_cast<int>(take);
        return out;
    }

    [[nodiscard]] std::size_t entry_count() const { return entries_.size(); }
    [[nodiscard]] std::size_t calls() const { return calls_.load(); }
    [[nodiscard]] const std::string& model_version() const { return model_version_; }

    static std::string describe(const Key& key) {
        std::string s = "(" + std::string(to_string(key.purpose)) + ", [";
        for (std::size_t i = 0; i < key.stale.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(key.stale[i]);
        }
        return s + "], turn " + std::to_string(key.turn) + ")";
    }

private:
    std::string model_version_ = "scripted-fixture-1";
    std::map<Key, Entry> entries_;
    std::atomic<std::size_t> calls_{0};
};

/// Validate a script document and build the backend.
///
/// Schema: {"version":1, "model"?:str, "entries":[{"key":{"purpose":str,
/// "stale":[int], "turn":int}, "candidates":[str], "confidence"?:num}]}
inline ScriptedBackend load_script(const json& doc) {
    auto fail = [](const std::string& why) { throw Error(ErrorCode::FixtureSchemaError, why); };
    if (!doc.is_object()) fail("script must be a JSON object");
    if (doc.empty()) return ScriptedBackend{};  // answers every call with ScriptMiss
    if (!doc.contains("version") || doc["version"] != 1) fail("script version must be 1");
    if (!doc.contains("entries") || !doc["entries"].is_array()) fail("script needs an 'entries' array");
    std::string model = "scripted-fixture-1";
    if (doc.contains("model")) {
        if (!doc["model"].is_string() || doc["model"].get<std::string>().empty()) fail("'model' must be a non-empty string");
        model = doc["model"].get<std::string>();
    }

    std::map<ScriptedBackend::Key, ScriptedBackend::Entry> entries;
    std::size_t index = 0;
    for (const auto& e : doc["entries"]) {
        const std::string where = "entry " + std::to_string(index++);
        if (!e.is_object() || !e.contains("key") || !e["key"].is_object()) fail(where + ": missing key");
        const auto& k = e["key"];
        if (!k.contains("purpose") || !k["purpose"].is_string()) fail(where + ": key.purpose must be a string");
        if (!k.contains("stale") || !k["stale"].is_array()) fail(where + ": key.stale must be an array");
        if (!k.contains("turn") || !k["turn"].is_number_integer() || k["turn"].get<int>() < 0) {
            fail(where + ": key.turn must be a non-negative integer");
        }
        ScriptedBackend::Key key;
        try {
            key.purpose = prompt_purpose_from_string(k["purpose"].get<std::string>());
        } catch (const Error&) {
            fail(where + ": unknown purpose");
        }
        for (const auto& s : k["stale"]) {
            if (!s.is_number_integer() || s.get<int>() <= 0) fail(where + ": stale ordinals must be positive");
            if (!key.stale.empty() && s.get<int>() <= key.stale.back()) fail(where + ": stale ordinals must increase");
            key.stale.push_back(s.get<int>());
        }
        key.turn = k["turn"].get<int>();

        ScriptedBackend::Entry entry;
        if (!e.contains("candidates") || !e["candidates"].is_array() || e["candidates"].empty()) {
            fail(where + ": candidates must be a non-empty array");
        }
        for (const auto& c : e["candidates"]) {
            if (!c.is_string()) fail(where + ": candidates must be strings");
            entry.candidates.push_back(c.get<std::string>());
        }
        if (e.contains("confidence")) {
            if (!e["confidence"].is_number()) fail(where + ": confidence must be a number");
            const double c = e["confidence"].get<double>();
            if (c < 0.0 || c > 1.0) fail(where + ": confidence must lie in [0,1]");
            entry.confidence = c;
        }
        if (!entries.emplace(key, std::move(entry)).second) {
            fail(where + ": duplicate key " + ScriptedBackend::describe(key));
        }
    }
    return ScriptedBackend(std::move(model), std::move(entries));
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::FixtureSchemaError, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::FixtureSchemaError, path.string() + ": " + e.what());
    }
}

inline ScriptedBackend load_script_file(const std::filesystem::path& path) { return load_script(read_json_file(path)); }

}  // namespace cocot
