#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>

#include "cocot/http_backend.hpp"
#include "cocot/model.hpp"
#include "support.hpp"

using namespace cocot;

namespace {

PromptBundle bundle(PromptPurpose purpose, std::vector<int> focus = {}, int turn = 0) {
    PromptBundle b;
    b.system = "sys";
    b.instruction = "do it";
    b.purpose = purpose;
    b.focus = std::move(focus);
    b.turn = turn;
    return b;
}

json one_entry(json key) {
    return {{"version", 1}, {"entries", json::array({{{"key", key}, {"candidates", {"[Step 1] a"}}}})}};
}

}  // namespace

TEST(ScriptedBackend, ReplaysDialectDraft) {
    auto backend = load_script_file(test::fixture("dialect_fairness.script.json"));
    const auto r = backend.complete(bundle(PromptPurpose::InitialDraft), 1, {{"temperature", 0.7}});
    ASSERT_EQ(r.candidates.size(), 1u);
    EXPECT_TRUE(r.candidates[0].starts_with("[Step 1] Define fairness in the context of language models"));
    EXPECT_EQ(r.metadata.model_version, "scripted-dialect-1");
    EXPECT_EQ(r.metadata.parameters.at("n"), 1);
    EXPECT_EQ(r.metadata.parameters.at("temperature"), 0.7);
    EXPECT_EQ(r.metadata.confidence, 0.82);
}

TEST(ScriptedBackend, ShortfallRecorded) {
    auto backend = load_script_file(test::fixture("dialect_fairness.script.json"));
    const auto r = backend.complete(bundle(PromptPurpose::InitialDraft), 3, {});
    EXPECT_EQ(r.candidates.size(), 1u);
    EXPECT_EQ(r.metadata.shortfall, 2);
    const auto two = backend.complete(bundle(PromptPurpose::RegenerateStale, {5, 6, 7, 8, 9}, 1), 3, {});
    EXPECT_EQ(two.candidates.size(), 2u);
    EXPECT_EQ(backend.calls(), 2u);
}

TEST(ScriptedBackend, DeterministicAndMisses) {
    auto backend = load_script_file(test::fixture("dialect_fairness.script.json"));
    const auto a = backend.complete(bundle(PromptPurpose::InitialDraft), 2, {{"seed", 1}});
    const auto b = backend.complete(bundle(PromptPurpose::InitialDraft), 2, {{"seed", 1}});
    EXPECT_EQ(a.candidates, b.candidates);
    EXPECT_EQ(a.metadata, b.metadata);
    EXPECT_CODE(backend.complete(bundle(PromptPurpose::InitialDraft, {}, 5), 1, {}), ErrorCode::ScriptMiss);
    EXPECT_CODE(backend.complete(bundle(PromptPurpose::InitialDraft), 0, {}), ErrorCode::Precondition);
}

TEST(ScriptedBackend, CancelledBeforeReply) {
    auto backend = load_script_file(test::fixture("dialect_fairness.script.json"));
    std::stop_source stop;
    stop.request_stop();
    EXPECT_CODE(backend.complete(bundle(PromptPurpose::InitialDraft), 1, {}, stop.get_token()), ErrorCode::Cancelled);
}

TEST(LoadScript, EmptyFixtureMissesEverything) {
    auto empty = load_script(json::object());
    EXPECT_EQ(empty.entry_count(), 0u);
    EXPECT_CODE(empty.complete(bundle(PromptPurpose::InitialDraft), 1, {}), ErrorCode::ScriptMiss);
    auto no_entries = load_script({{"version", 1}, {"entries", json::array()}});
    EXPECT_CODE(no_entries.complete(bundle(PromptPurpose::FinalAnswer), 1, {}), ErrorCode::ScriptMiss);
}

TEST(LoadScript, SchemaErrors) {
    const json key{{"purpose", "InitialDraft"}, {"stale", json::array()}, {"turn", 0}};
    auto dup = one_entry(key);
    dup["entries"].push_back(dup["entries"][0]);
    EXPECT_CODE(load_script(dup), ErrorCode::FixtureSchemaError);

    EXPECT_CODE(load_script(json::array()), ErrorCode::FixtureSchemaError);
    EXPECT_CODE(load_script({{"version", 2}, {"entries", json::array()}}), ErrorCode::FixtureSchemaError);
    EXPECT_CODE(load_script(one_entry({{"purpose", "Nope"}, {"stale", json::array()}, {"turn", 0}})),
                ErrorCode::FixtureSchemaError);
    EXPECT_CODE(load_script(one_entry({{"purpose", "RegenerateStale"}, {"stale", {3, 2}}, {"turn", 0}})),
                ErrorCode::FixtureSchemaError);
    EXPECT_CODE(load_script(one_entry({{"purpose", "InitialDraft"}, {"stale", json::array()}, {"turn", -1}})),
                ErrorCode::FixtureSchemaError);
    auto bad_conf = one_entry(key);
    bad_conf["entries"][0]["confidence"] = 1.5;
    EXPECT_CODE(load_script(bad_conf), ErrorCode::FixtureSchemaError);
    auto no_cands = one_entry(key);
    no_cands["entries"][0]["candidates"] = json::array();
    EXPECT_CODE(load_script(no_cands), ErrorCode::FixtureSchemaError);
    EXPECT_CODE(load_script_file(test::fixture("missing.json")), ErrorCode::FixtureSchemaError);
}

TEST(HttpBackend, Confidence) {
    EXPECT_FALSE(confidence_from_logprobs(json::object()).has_value());
    const json choice{{"logprobs", {{"token_logprobs", {-0.1, -0.3}}}}};
    EXPECT_NEAR(*confidence_from_logprobs(choice), std::exp(-0.2), 1e-12);
    const json chat{{"logprobs", {{"content", {{{"logprob", 0.0}}}}}}};
    EXPECT_DOUBLE_EQ(*confidence_from_logprobs(chat), 1.0);
}

TEST(HttpBackend, ParseReply) {
    const auto r = HttpBackend::parse_reply(
        R"({"model":"m-2","choices":[{"message":{"content":"x"}},{"text":"y"},{"text":"z"}]})", 2, {}, "fallback");
    EXPECT_EQ(r.candidates, (std::vector<std::string>{"x", "y"}));
    EXPECT_EQ(r.metadata.model_version, "m-2");
    EXPECT_EQ(r.metadata.shortfall, 0);
    EXPECT_EQ(HttpBackend::parse_reply(R"({"choices":[{"text":"x"}]})", 3, {}, "fallback").metadata.shortfall, 2);
    EXPECT_CODE(HttpBackend::parse_reply("not json", 1, {}, "m"), ErrorCode::BackendMalformedReply);
    EXPECT_CODE(HttpBackend::parse_reply(R"({"choices":[]})", 1, {}, "m"), ErrorCode::BackendMalformedReply);
    EXPECT_CODE(HttpBackend::parse_reply(R"({"choices":[{"x":1}]})", 1, {}, "m"), ErrorCode::BackendMalformedReply);
}

TEST(HttpBackend, MakeRequest) {
    auto b = bundle(PromptPurpose::InitialDraft);
    b.directives = {"Be brief."};
    const auto req = HttpBackend::make_request(b, 2, {{"temperature", 0.2}, {"seed", 9}}, "m");
    EXPECT_EQ(req["model"], "m");
    EXPECT_EQ(req["n"], 2);
    EXPECT_EQ(req["temperature"], 0.2);
    EXPECT_EQ(req["seed"], 9);
    EXPECT_EQ(req["messages"][0]["content"], b.system_message());
    EXPECT_EQ(req["messages"][1]["content"], "do it");
}

class LocalEndpoint : public ::testing::Test {
protected:
    void SetUp() override {
        server_.Post("/v1/chat", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits_;
            last_auth_ = req.get_header_value("Authorization");
            if (fail_first_ && hits_ == 1) {
                res.status = 503;
                return;
            }
            if (reject_) {
                res.status = 401;
                return;
            }
            const auto body = json::parse(req.body);
            json choices = json::array();
            for (int i = 0; i < body["n"].get<int>(); ++i) choices.push_back({{"text", "[Step 1] c" + std::to_string(i)}});
            res.set_content(json{{"model", "local-1"}, {"choices", choices}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    void TearDown() override {
        server_.stop();
        thread_.join();
    }

    HttpBackend backend(int retries = 1) {
        return HttpBackend({"http://127.0.0.1:" + std::to_string(port_) + "/v1/chat", "m", "COCOT_TEST_TOKEN", 5,
                            retries});
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> hits_{0};
    std::string last_auth_;
    bool fail_first_ = false;
    bool reject_ = false;
};

TEST_F(LocalEndpoint, CompletesWithToken) {
    ::setenv("COCOT_TEST_TOKEN", "secret", 1);
    auto b = backend();
    const auto r = b.complete(bundle(PromptPurpose::InitialDraft), 2, {{"temperature", 0.7}});
    EXPECT_EQ(r.candidates, (std::vector<std::string>{"[Step 1] c0", "[Step 1] c1"}));
    EXPECT_EQ(r.metadata.model_version, "local-1");
    EXPECT_EQ(last_auth_, "Bearer secret");
    ::unsetenv("COCOT_TEST_TOKEN");
}

TEST_F(LocalEndpoint, RetriesServerErrorOnce) {
    fail_first_ = true;
    auto b = backend();
    EXPECT_EQ(b.complete(bundle(PromptPurpose::InitialDraft), 1, {}).candidates.size(), 1u);
    EXPECT_EQ(hits_.load(), 2);
}

TEST_F(LocalEndpoint, ClientErrorIsNotRetried) {
    reject_ = true;
    auto b = backend();
    EXPECT_CODE(b.complete(bundle(PromptPurpose::InitialDraft), 1, {}), ErrorCode::BackendUnreachable);
    EXPECT_EQ(hits_.load(), 1);
}

TEST(HttpBackendOffline, UnreachableEndpoint) {
    // Port 9 on loopback: nothing listens there in the test environment.
    HttpBackend b({"http://127.0.0.1:9/v1/chat", "m", "", 1, 1});
    EXPECT_CODE(b.complete(bundle(PromptPurpose::InitialDraft), 1, {}), ErrorCode::BackendUnreachable);
    EXPECT_CODE(HttpBackend({"no-scheme", "m", "", 1, 0}), ErrorCode::Precondition);
}
