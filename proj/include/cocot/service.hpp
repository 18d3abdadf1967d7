#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>

#include "cocot/engine.hpp"
#include "cocot/store.hpp"

namespace cocot {

/// Mutex that admits waiters in arrival order.
class FifoMutex {
public:
    void lock() {
        std::unique_lock lk(mu_);
        const auto ticket = next_++;
        cv_.wait(lk, [&] { return serving_ == ticket; });
    }
    void unlock() {
        {
            std::lock_guard lk(mu_);
            ++serving_;
        }
        cv_.notify_all();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::uint64_t next_ = 0;
    std::uint64_t serving_ = 0;
};

struct ServiceOptions {
    SessionConfig defaults;
    std::function<std::int64_t()> clock;
    /// How long a follow-mode event stream waits between checks.
    std::chrono::milliseconds poll{500};
};

/// Session API shared by the HTTP server and the REPL. Requests for one
/// session are serialized; different sessions proceed independently.
class Service {
public:
    struct Reply {
        std::string session_id;
        std::vector<std::string> messages;
        SessionState state = SessionState::Created;
        bool finished = false;
    };

    Service(Backend& backend, SessionStore store, ServiceOptions options = {})
        : backend_(backend), store_(std::move(store)), profiles_(store_.dir()), options_(std::move(options)) {}

    Reply create(const std::string& query, const json& config_overrides = json::object()) {
        const SessionConfig config = config_from_json(config_overrides, options_.defaults);
        EngineOptions opts = engine_options();
        if (!config.profile.empty()) opts.initial_preference = profiles_.load(config.profile);
        auto outcome = start_session(query, config, backend_, opts);
        store_.save(outcome.session);
        auto slot = std::make_shared<Slot>();
        slot->session = outcome.session;
        {
            std::lock_guard lk(map_mu_);
            slots_[outcome.session.id] = slot;
        }
        return {outcome.session.id, std::move(outcome.messages), outcome.session.state, outcome.finished};
    }

    Reply utter(const std::string& id, const std::string& text) {
        auto slot = find(id);
        std::lock_guard writer(slot->writer);
        Session current = snapshot(*slot);
        const auto logged = current.edit_log.size();
        auto outcome = handle_utterance(current, text, backend_, engine_options());
        store_.save(outcome.session);
        if (!outcome.session.config.profile.empty()) {
            const auto& records = outcome.session.edit_log.records();
            profiles_.append_edits(outcome.session.config.profile,
                                   std::vector<EditRecord>(records.begin() + static_cast<std::ptrdiff_t>(logged),
                                                           records.end()));
            profiles_.save(outcome.session.config.profile, outcome.session.preference);
        }
        {
            std::lock_guard lk(slot->mu);
            slot->session = outcome.session;
        }
        slot->cv.notify_all();
        return {id, std::move(outcome.messages), outcome.session.state, outcome.finished};
    }

    Session session(const std::string& id) { return snapshot(*find(id)); }

    json envelope(const std::string& id) { return make_envelope(session(id)); }

    std::string export_document(const std::string& id, ExportFormat format) {
        return export_session(session(id), format);
    }

    /// Events with seq > after.
    std::vector<TranscriptEvent> events(const std::string& id, std::uint64_t after) {
        const Session s = session(id);
        std::vector<TranscriptEvent> out;
        for (const auto& e : s.transcript.events()) {
            if (e.seq > after) out.push_back(e);
        }
        return out;
    }

    /// Block until the session has events beyond `after`, it finishes, or the timeout passes.
    bool wait_for_events(const std::string& id, std::uint64_t after, std::chrono::milliseconds timeout) {
        auto slot = find(id);
        std::unique_lock lk(slot->mu);
        return slot->cv.wait_for(lk, timeout, [&] { return slot->session.transcript.size() > after; });
    }

    static std::string sse_frame(const TranscriptEvent& e) {
        const json data{{"seq", e.seq}, {"kind", to_string(e.kind)}, {"payload", e.payload}};
        return "id: " + std::to_string(e.seq) + "\nevent: " + std::string(to_string(e.kind)) + "\ndata: " +
               data.dump() + "\n\n";
    }

    void mount(httplib::Server& server) {
        server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = json::parse(req.body);
                if (!body.contains("query") || !body["query"].is_string()) {
                    throw Error(ErrorCode::Precondition, "body needs a string 'query'");
                }
                const auto reply = create(body["query"].get<std::string>(), body.value("config", json::object()));
                res.status = 201;
                res.set_content(json{{"session_id", reply.session_id},
                                     {"messages", reply.messages},
                                     {"state", to_string(reply.state)}}
                                    .dump(),
                                "application/json");
            });
        });
        server.Get(R"(/sessions/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { res.set_content(envelope(req.matches[1]).dump(), "application/json"); });
        });
        server.Post(R"(/sessions/([A-Za-z0-9_-]+)/utterances)",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        guarded(res, [&] {
                            const json body = json::parse(req.body);
                            if (!body.contains("text") || !body["text"].is_string()) {
                                throw Error(ErrorCode::Precondition, "body needs a string 'text'");
                            }
                            const auto reply = utter(req.matches[1], body["text"].get<std::string>());
                            res.set_content(json{{"messages", reply.messages},
                                                 {"state", to_string(reply.state)},
                                                 {"finished", reply.finished}}
                                                .dump(),
                                            "application/json");
                        });
                    });
        server.Get(R"(/sessions/([A-Za-z0-9_-]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string format = req.has_param("format") ? req.get_param_value("format") : "markdown";
                if (format != "markdown" && format != "json") {
                    throw Error(ErrorCode::Precondition, "format must be markdown or json");
                }
                const bool as_json = format == "json";
                res.set_content(export_document(req.matches[1], as_json ? ExportFormat::Json : ExportFormat::Markdown),
                                as_json ? "application/json" : "text/markdown");
            });
        });
        server.Get(R"(/sessions/([A-Za-z0-9_-]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string id = req.matches[1];
                std::uint64_t after = 0;
                if (req.has_param("after")) after = std::stoull(req.get_param_value("after"));
                if (req.has_header("Last-Event-ID")) after = std::stoull(req.get_header_value("Last-Event-ID"));
                const bool follow = !req.has_param("follow") || req.get_param_value("follow") != "0";
                session(id);  // 404 before streaming starts
                if (!follow) {
                    std::string body;
                    for (const auto& e : events(id, after)) body += sse_frame(e);
                    res.set_content(body, "text/event-stream");
                    return;
                }
                res.set_chunked_content_provider(
                    "text/event-stream", [this, id, after](std::size_t, httplib::DataSink& sink) mutable {
                        for (const auto& e : events(id, after)) {
                            const auto frame = sse_frame(e);
                            if (!sink.write(frame.data(), frame.size())) return false;
                            after = e.seq;
                        }
                        const Session s = session(id);
                        if (s.state == SessionState::Done || s.state == SessionState::Failed) {
                            if (s.transcript.size() <= after) {
                                sink.done();
                                return true;
                            }
                        }
                        wait_for_events(id, after, options_.poll);
                        return sink.is_writable();
                    });
            });
        });
    }

private:
    struct Slot {
        FifoMutex writer;
        std::mutex mu;
        std::condition_variable cv;
        Session session;
    };

    EngineOptions engine_options() const {
        EngineOptions opts;
        opts.clock = options_.clock;
        return opts;
    }

    static Session snapshot(Slot& slot) {
        std::lock_guard lk(slot.mu);
        return slot.session;
    }

    std::shared_ptr<Slot> find(const std::string& id) {
        std::lock_guard lk(map_mu_);
        if (const auto it = slots_.find(id); it != slots_.end()) return it->second;
        auto slot = std::make_shared<Slot>();
        slot->session = store_.load(id);  // throws SessionNotFound
        slots_[id] = slot;
        return slot;
    }

    template <typename F>
    static void guarded(httplib::Response& res, F&& body) {
        auto fail = [&](int status, const std::string& code, const std::string& what) {
            res.status = status;
            res.set_content(json{{"error", code}, {"detail", what}}.dump(), "application/json");
        };
        try {
            body();
        } catch (const Error& e) {
            switch (e.code()) {
                case ErrorCode::SessionNotFound: fail(404, std::string(to_string(e.code())), e.what()); break;
                case ErrorCode::BackendUnreachable:
                case ErrorCode::BackendMalformedReply:
                case ErrorCode::ScriptMiss: fail(502, std::string(to_string(e.code())), e.what()); break;
                case ErrorCode::StoreUnwritable:
                case ErrorCode::EnvelopeCorrupt: fail(500, std::string(to_string(e.code())), e.what()); break;
                default: fail(400, std::string(to_string(e.code())), e.what()); break;
            }
        } catch (const json::exception& e) {
            fail(400, "BadRequest", e.what());
        } catch (const std::exception& e) {
            fail(500, "Internal", e.what());
        }
    }

    Backend& backend_;
    SessionStore store_;
    ProfileStore profiles_;
    ServiceOptions options_;
    std::mutex map_mu_;
    std::map<std::string, std::shared_ptr<Slot>> slots_;
};

}  // namespace cocot
