#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>
#include <unistd.h>

#include "cocot/serialize.hpp"

namespace cocot {

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::Precondition, "SHA-256 failed");
    }
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return out.str();
}

inline constexpr int kSchemaVersion = 1;

/// {schema_version, session, checksum}; the checksum covers the compact dump
/// of the session object.
inline json make_envelope(const Session& session) {
    json body = to_json(session);
    const std::string checksum = "sha256:" + sha256_hex(body.dump());
    return {{"schema_version", kSchemaVersion}, {"session", std::move(body)}, {"checksum", checksum}};
}

inline Session open_envelope(const json& envelope) {
    if (!envelope.is_object() || envelope.value("schema_version", 0) != kSchemaVersion) {
        throw Error(ErrorCode::EnvelopeCorrupt, "unsupported schema_version");
    }
    if (!envelope.contains("session") || !envelope.contains("checksum")) {
        throw Error(ErrorCode::EnvelopeCorrupt, "envelope is missing fields");
    }
    const auto& body = envelope["session"];
    if (envelope["checksum"] != "sha256:" + sha256_hex(body.dump())) {
        throw Error(ErrorCode::EnvelopeCorrupt, "checksum mismatch");
    }
    try {
        return session_from_json(body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::EnvelopeCorrupt, e.what());
    }
}

/// Write `content` to `path` via a temporary file and rename, so readers see
/// either the previous version or the new one.
inline void atomic_write(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::StoreUnwritable, "cannot create " + path.parent_path().string());

    std::random_device rd;
    const fs::path tmp = path.string() + ".tmp-" + std::to_string(rd());
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw Error(ErrorCode::StoreUnwritable, "cannot write " + tmp.string());
    const bool written = std::fwrite(content.data(), 1, content.size(), f) == content.size() &&
                         std::fflush(f) == 0 && ::fsync(fileno(f)) == 0;
    std::fclose(f);
    if (!written) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::StoreUnwritable, "short write to " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::StoreUnwritable, "cannot replace " + path.string());
    }
}

inline bool valid_session_id(std::string_view id) {
    if (id.empty() || id.size() > 128) return false;
    for (char c : id) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) return false;
    }
    return true;
}

/// One JSON envelope file per session under a directory.
class SessionStore {
public:
    explicit SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

    [[nodiscard]] std::filesystem::path path_for(std::string_view id) const {
        if (!valid_session_id(id)) throw Error(ErrorCode::SessionNotFound, "invalid session id");
        return dir_ / (std::string(id) + ".json");
    }

    std::filesystem::path save(const Session& session) const {
        const auto path = path_for(session.id);
        atomic_write(path, make_envelope(session).dump(2) + "\n");
        return path;
    }

    [[nodiscard]] json load_envelope(std::string_view id) const {
        const auto path = path_for(id);
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::SessionNotFound, "no stored session " + std::string(id));
        try {
            return json::parse(in);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::EnvelopeCorrupt, e.what());
        }
    }

    [[nodiscard]] Session load(std::string_view id) const { return open_envelope(load_envelope(id)); }

    [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

inline void write_edit_log(std::ostream& out, const std::vector<EditRecord>& records) {
    for (const auto& r : records) out << to_json(r).dump() << "\n";
}

inline std::vector<EditRecord> read_edit_log(std::istream& in) {
    std::vector<EditRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        out.push_back(edit_record_from_json(json::parse(line)));
    }
    return out;
}

/// Opt-in per-user preference profile: <dir>/profiles/<name>.json holds the
/// preference vector, <name>.edits.jsonl the accumulated edit log.
class ProfileStore {
public:
    explicit ProfileStore(std::filesystem::path session_dir) : dir_(std::move(session_dir) / "profiles") {}

    [[nodiscard]] std::optional<PreferenceVector> load(std::string_view name) const {
        std::ifstream in(file(name, ".json"));
        if (!in) return std::nullopt;
        const json j = json::parse(in);
        return preference_from_json(j.at("preference"));
    }

    void save(std::string_view name, const PreferenceVector& pref) const {
        atomic_write(file(name, ".json"),
                     json{{"schema_version", kSchemaVersion}, {"preference", to_json(pref)}}.dump(2) + "\n");
    }

    void append_edits(std::string_view name, const std::vector<EditRecord>& records) const {
        if (records.empty()) return;
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        std::ofstream out(file(name, ".edits.jsonl"), std::ios::app);
        if (!out) throw Error(ErrorCode::StoreUnwritable, "cannot append to profile log");
        write_edit_log(out, records);
    }

    [[nodiscard]] std::vector<EditRecord> edits(std::string_view name) const {
        std::ifstream in(file(name, ".edits.jsonl"));
        if (!in) return {};
        return read_edit_log(in);
    }

private:
    [[nodiscard]] std::filesystem::path file(std::string_view name, std::string_view ext) const {
        if (!valid_session_id(name)) throw Error(ErrorCode::Precondition, "invalid profile name");
        return dir_ / (std::string(name) + std::string(ext));
    }

    std::filesystem::path dir_;
};

}  // namespace cocot
