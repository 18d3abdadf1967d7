#pragma once

#include <cmath>
#include <cstdlib>
#include <string>

#include <httplib.h>

#include "cocot/model.hpp"

namespace cocot {

struct HttpBackendConfig {
    /// Full URL of the completion endpoint, e.g. http://127.0.0.1:8000/v1/chat/completions
    std::string endpoint;
    std::string model = "default";
    /// Name of the environment variable holding the bearer token; empty for none.
    std::string token_env;
    int timeout_seconds = 60;
    /// Extra attempts after a transport failure (0 or 1).
    int retries = 1;
};

/// Maps mean token log-probability to (0,1] with exp(); monotone.
inline std::optional<double> confidence_from_logprobs(const json& choice) {
    if (!choice.contains("logprobs") || !choice["logprobs"].is_object()) return std::nullopt;
    const auto& lp = choice["logprobs"];
    std::vector<double> values;
    if (lp.contains("token_logprobs") && lp["token_logprobs"].is_array()) {
        for (const auto& v : lp["token_logprobs"]) {
            if (v.is_number()) values.push_back(v.get<double>());
        }
    } else if (lp.contains("content") && lp["content"].is_array()) {
        for (const auto& t : lp["content"]) {
            if (t.is_object() && t.contains("logprob") && t["logprob"].is_number()) {
                values.push_back(t["logprob"].get<double>());
            }
        }
    }
    if (values.empty()) return std::nullopt;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    return std::clamp(std::exp(mean), 0.0, 1.0);
}

/// Generic JSON chat-completion backend.
///
/// Request:  {"model", "messages":[{"role","content"}], "n", "temperature", "seed"?}
/// Reply:    {"choices":[{"text"} | {"message":{"content"}}], "model"}
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
        const auto scheme_end = config_.endpoint.find("://");
        if (scheme_end == std::string::npos) throw Error(ErrorCode::Precondition, "endpoint must be an absolute URL");
        const auto path_start = config_.endpoint.find('/', scheme_end + 3);
        base_ = config_.endpoint.substr(0, path_start);
        path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
    }

    static json make_request(const PromptBundle& bundle, int n, const ModelParams& params, const std::string& model) {
        json req{{"model", model},
                 {"messages", json::array({{{"role", "system"}, {"content", bundle.system_message()}},
                                           {{"role", "user"}, {"content", bundle.user_message()}}})},
                 {"n", n}};
        req["temperature"] = params.contains("temperature") ? params.at("temperature") : json(0.7);
        if (params.contains("seed")) req["seed"] = params.at("seed");
        return req;
    }

    static ModelResponse parse_reply(const std::string& body, int n, const ModelParams& params,
                                     const std::string& fallback_model) {
        json reply;
        try {
            reply = json::parse(body);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::BackendMalformedReply, e.what());
        }
        if (!reply.is_object() || !reply.contains("choices") || !reply["choices"].is_array() ||
            reply["choices"].empty()) {
            throw Error(ErrorCode::BackendMalformedReply, "reply has no choices");
        }
        ModelResponse out;
        for (const auto& choice : reply["choices"]) {
            if (out.candidates.size() >= static_cast<std::size_t>(n)) break;
            if (choice.contains("text") && choice["text"].is_string()) {
                out.candidates.push_back(choice["text"].get<std::string>());
            } else if (choice.contains("message") && choice["message"].is_object() &&
                       choice["message"].contains("content") && choice["message"]["content"].is_string()) {
                out.candidates.push_back(choice["message"]["content"].get<std::string>());
            } else {
                throw Error(ErrorCode::BackendMalformedReply, "choice carries no text");
            }
        }
        out.metadata.model_version = reply.contains("model") && reply["model"].is_string() &&
                                             !reply["model"].get<std::string>().empty()
                                         ? reply["model"].get<std::string>()
                                         : fallback_model;
        out.metadata.parameters = params;
        out.metadata.parameters["n"] = n;
        out.metadata.confidence = confidence_from_logprobs(reply["choices"][0]);
        out.metadata.shortfall = n - static_cast<int>(out.candidates.size());
        return out;
    }

    ModelResponse complete(const PromptBundle& bundle, int n, const ModelParams& params,
                           std::stop_token stop = {}) override {
        if (n < 1) throw Error(ErrorCode::Precondition, "candidate count must be >= 1");
        const std::string body = make_request(bundle, n, params, config_.model).dump();

        httplib::Headers headers;
        if (!config_.token_env.empty()) {
            if (const char* token = std::getenv(config_.token_env.c_str()); token && *token) {
                headers.emplace("Authorization", std::string("Bearer ") + token);
            }
        }
        std::string failure;
        for (int attempt = 0; attempt <= std::max(0, config_.retries); ++attempt) {
            throw_if_cancelled(stop);
            httplib::Client client(base_);
            client.set_connection_timeout(config_.timeout_seconds, 0);
            client.set_read_timeout(config_.timeout_seconds, 0);
            client.set_write_timeout(config_.timeout_seconds, 0);
            auto res = client.Post(path_, headers, body, "application/json");
            throw_if_cancelled(stop);
            if (!res) {
                failure = httplib::to_string(res.error());
                continue;
            }
            if (res->status < 200 || res->status >= 300) {
                failure = "HTTP " + std::to_string(res->status);
                if (res->status >= 500) continue;
                break;
            }
            return parse_reply(res->body, n, params, config_.model);
        }
        throw Error(ErrorCode::BackendUnreachable, config_.endpoint + ": " + failure);
    }

private:
    HttpBackendConfig config_;
    std::string base_;
    std::string path_;
};

}  // namespace cocot
