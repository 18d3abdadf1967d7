#include <gtest/gtest.h>

#include "cocot/engine.hpp"
#include "cocot/scenario.hpp"
#include "support.hpp"

using namespace cocot;

namespace {

json entry(const std::string& purpose, std::vector<int> stale, int turn, std::vector<std::string> candidates) {
    return {{"key", {{"purpose", purpose}, {"stale", stale}, {"turn", turn}}}, {"candidates", candidates}};
}

const std::string kFour = "[Step 1] a\n\n[Step 2] b\n\n[Step 3] c\n\n[Step 4] d";

json four_step_script() {
    return {{"version", 1},
            {"entries",
             {entry("InitialDraft", {}, 0, {kFour}), entry("RegenerateStale", {3, 4}, 1, {"[Step 3] c2\n[Step 4] d2"}),
              entry("FinalAnswer", {}, 0, {"Answer from the draft."}),
              entry("FinalAnswer", {}, 1, {"Answer after one edit."}),
              entry("BiasAudit", {2}, 0, {"Step 2 assumes a single standard."}),
              entry("BiasAudit", {2}, 1, {"No bias found."})}}};
}

/// Records every bundle it forwards.
class Recording final : public Backend {
public:
    explicit Recording(Backend& inner) : inner_(inner) {}
    ModelResponse complete(const PromptBundle& b, int n, const ModelParams& p, std::stop_token stop) override {
        bundles.push_back(b);
        return inner_.complete(b, n, p, stop);
    }
    std::vector<PromptBundle> bundles;

private:
    Backend& inner_;
};

SessionConfig seeded() {
    SessionConfig c;
    c.seed = 1;
    return c;
}

EngineOptions fixed_clock() {
    EngineOptions o;
    o.clock = [] { return std::int64_t{1700000000000}; };
    return o;
}

std::vector<std::string> texts(const ReasoningChain& c) {
    std::vector<std::string> out;
    for (const auto& s : c.steps()) out.push_back(s.text);
    return out;
}

}  // namespace

TEST(StartSession, DialectDraft) {
    auto backend = load_script_file(test::fixture("dialect_fairness.script.json"));
    const auto out = start_session("How can we ensure that language models treat minority dialects fairly?", seeded(),
                                   backend);
    EXPECT_EQ(out.session.state, SessionState::AwaitingReview);
    EXPECT_EQ(out.session.chain.size(), 8u);
    ASSERT_EQ(out.messages.size(), 3u);
    EXPECT_TRUE(out.messages[0].starts_with("Model disclosure:\nversion: scripted-dialect-1\n"));
    EXPECT_TRUE(out.messages[1].starts_with("[Step 1] Define fairness"));
    EXPECT_EQ(out.messages[2], kReviewQuestion);
    EXPECT_FALSE(out.finished);
}

TEST(StartSession, EmptyQuery) {
    auto backend = load_script(four_step_script());
    EXPECT_CODE(start_session("   ", seeded(), backend), ErrorCode::Precondition);
    EXPECT_EQ(backend.calls(), 0u);
}

TEST(StartSession, ProseTwiceFails) {
    auto backend = load_script({{"version", 1}, {"entries", {entry("InitialDraft", {}, 0, {"Just prose."})}}});
    const auto out = start_session("q", seeded(), backend);
    EXPECT_EQ(out.session.state, SessionState::Failed);
    EXPECT_EQ(backend.calls(), 2u);
    EXPECT_TRUE(out.finished);
    EXPECT_NE(out.messages.back().find("NoStepsFound"), std::string::npos);
}

TEST(HandleUtterance, ReplaceRegeneratesDependents) {
    auto backend = load_script(four_step_script());
    Recording rec(backend);
    const auto start = start_session("q", seeded(), rec);
    const auto out = handle_utterance(start.session, "Replace Step 2 with: Assume X leads to Z instead.", rec,
                                      fixed_clock());
    ASSERT_EQ(out.messages.size(), 4u);
    EXPECT_EQ(out.messages[0], "Updated Step 2 acknowledged. Recalculating Steps 3 and 4...");
    EXPECT_TRUE(out.messages[1].starts_with("Model disclosure:"));
    EXPECT_EQ(out.messages[3], kReviewQuestion);
    EXPECT_EQ(texts(out.session.chain), (std::vector<std::string>{"a", "Assume X leads to Z instead.", "c2", "d2"}));
    EXPECT_EQ(out.session.state, SessionState::AwaitingReview);
    EXPECT_EQ(out.session.edit_log.size(), 1u);
    EXPECT_EQ(out.session.edit_log.records()[0].timestamp, 1700000000000);
    EXPECT_EQ(out.session.edit_count, 1);
    EXPECT_EQ(rec.bundles.back().focus, (std::vector<int>{3, 4}));
    // Steps outside the invalidated set keep their ids and text.
    EXPECT_EQ(out.session.chain.at_ordinal(1), start.session.chain.at_ordinal(1));
}

TEST(HandleUtterance, ContinueFinalizes) {
    auto backend = load_script(four_step_script());
    const auto start = start_session("q", seeded(), backend);
    const auto out = handle_utterance(start.session, "Continue", backend);
    EXPECT_EQ(out.session.state, SessionState::Done);
    ASSERT_TRUE(out.session.final_answer);
    EXPECT_EQ(out.session.final_answer->text, "Answer from the draft.");
    EXPECT_EQ(out.messages.back(), kExportOffer);
    EXPECT_TRUE(out.finished);
}

TEST(HandleUtterance, UnknownStep) {
    auto backend = load_script(four_step_script());
    const auto start = start_session("q", seeded(), backend);
    const auto out = handle_utterance(start.session, "Replace Step 99 with: x", backend);
    EXPECT_EQ(out.session.state, SessionState::AwaitingReview);
    EXPECT_EQ(out.session.chain, start.session.chain);
    EXPECT_NE(out.messages[0].find("does not exist"), std::string::npos);
    EXPECT_EQ(out.session.edit_count, 0);
}

TEST(HandleUtterance, WrongStepsTwiceFails) {
    auto script = four_step_script();
    script["entries"][1]["candidates"] = {"[Step 2] nope\n[Step 3] c2\n[Step 4] d2"};
    auto backend = load_script(script);
    const auto start = start_session("q", seeded(), backend);
    const auto out = handle_utterance(start.session, "Replace Step 2 with: z", backend);
    EXPECT_EQ(out.session.state, SessionState::Failed);
    EXPECT_NE(out.messages.back().find("RegeneratedWrongSteps"), std::string::npos);
    EXPECT_FALSE(out.session.final_answer);
}

TEST(HandleUtterance, PiiEditHeldUntilOverride) {
    auto backend = load_script(four_step_script());
    const auto start = start_session("q", seeded(), backend);
    const auto held = handle_utterance(start.session, "Replace Step 4 with: mail jo@example.org", backend);
    EXPECT_EQ(held.session.chain, start.session.chain);
    EXPECT_TRUE(held.messages[0].starts_with("Privacy reminder:"));
    EXPECT_EQ(held.session.transcript.count(EventKind::Warning), 1u);
    const auto applied = handle_utterance(held.session, "apply anyway", backend);
    EXPECT_EQ(applied.session.chain.at_ordinal(4).text, "mail jo@example.org");
    EXPECT_FALSE(applied.session.pending);
}

TEST(HandleUtterance, FreeformForwarded) {
    auto script = four_step_script();
    script["entries"].push_back(entry("RegenerateStale", {1, 2, 3, 4}, 1, {"[Step 1] A\n[Step 2] B\n[Step 3] C\n[Step 4] D"}));
    auto backend = load_script(script);
    const auto start = start_session("q", seeded(), backend);
    const auto asked = handle_utterance(start.session, "make it shorter please", backend);
    EXPECT_EQ(asked.session.chain, start.session.chain);
    ASSERT_TRUE(asked.session.pending);
    const auto fwd = handle_utterance(asked.session, "forward", backend);
    EXPECT_EQ(texts(fwd.session.chain), (std::vector<std::string>{"A", "B", "C", "D"}));
    EXPECT_EQ(fwd.session.state, SessionState::AwaitingReview);
}

TEST(HandleUtterance, BiasCheck) {
    auto backend = load_script(four_step_script());
    const auto start = start_session("q", seeded(), backend);
    const auto out = handle_utterance(start.session, "Is there any bias in Step 2?", backend);
    EXPECT_EQ(out.messages[1], "Bias check for Step 2:\nStep 2 assumes a single standard.");
    EXPECT_EQ(out.session.chain, start.session.chain);
}

TEST(HandleUtterance, CancelledLeavesSessionUntouched) {
    auto backend = load_script(four_step_script());
    const auto start = start_session("q", seeded(), backend);
    std::stop_source stop;
    stop.request_stop();
    EngineOptions opts;
    opts.stop = stop.get_token();
    EXPECT_CODE(handle_utterance(start.session, "Replace Step 2 with: z", backend, opts), ErrorCode::Cancelled);
    EXPECT_EQ(start.session.state, SessionState::AwaitingReview);
}

TEST(HandleUtterance, DoneOnlyExports) {
    auto backend = load_script(four_step_script());
    const auto done = handle_utterance(start_session("q", seeded(), backend).session, "Continue", backend);
    const auto again = handle_utterance(done.session, "Replace Step 1 with: x", backend);
    EXPECT_EQ(again.session.chain, done.session.chain);
    EXPECT_EQ(again.session.state, SessionState::Done);
    const auto exported = handle_utterance(done.session, "export as markdown", backend);
    EXPECT_TRUE(exported.messages[0].starts_with("# Reasoning session "));
}

TEST(HandleUtterance, DirectivesReachTheRegenerationPrompt) {
    auto script = four_step_script();
    script["entries"][1]["candidates"] = {"[Step 3] c2\n[Step 4] d2"};
    auto backend = load_script(script);
    Recording rec(backend);
    EngineOptions opts;
    PreferenceVector strong;
    strong.p[1] = 0.5;
    opts.initial_preference = strong;
    const auto start = start_session("q", seeded(), rec, opts);
    handle_utterance(start.session, "Replace Step 2 with: but however instead", rec, opts);
    const auto sys = rec.bundles.back().system_message();
    EXPECT_NE(sys.find("1. Prefer concrete counterexamples over unexamined assumptions."), std::string::npos);
}

TEST(RegenerateStale, NothingStale) {
    auto backend = load_script(four_step_script());
    auto s = start_session("q", seeded(), backend).session;
    s.state = SessionState::Regenerating;
    EXPECT_CODE(regenerate_stale(s, backend), ErrorCode::Precondition);
    s.state = SessionState::AwaitingReview;
    EXPECT_CODE(regenerate_stale(s, backend), ErrorCode::Precondition);
}

TEST(Finalize, Gates) {
    auto backend = load_script(four_step_script());
    auto s = start_session("q", seeded(), backend).session;
    EXPECT_CODE(finalize(s, backend), ErrorCode::IllegalTransition);
    s.state = SessionState::Finalizing;
    auto stale = s;
    stale.chain.mark_stale(stale.chain.at_ordinal(2).id);
    EXPECT_CODE(finalize(stale, backend), ErrorCode::StaleStepsRemain);
    auto empty = s;
    empty.chain = new_chain({});
    EXPECT_CODE(finalize(empty, backend), ErrorCode::EmptyChain);
    const auto answer = finalize(s, backend);
    EXPECT_EQ(answer.text, "Answer from the draft.");
    EXPECT_EQ(answer.chain_snapshot, s.chain);
    EXPECT_EQ(s.state, SessionState::Done);
}

TEST(Confirm, RefusedWhileEmpty) {
    auto backend = load_script(four_step_script());
    const auto start = start_session("q", seeded(), backend);
    auto s = handle_utterance(start.session, "Delete only step 1 and delete only step 2 and delete only step 3 and "
                                             "delete only step 4", backend).session;
    EXPECT_TRUE(s.chain.empty());
    const auto out = handle_utterance(s, "Continue", backend);
    EXPECT_EQ(out.session.state, SessionState::AwaitingReview);
    const auto refill = handle_utterance(s, "Insert after Step 0: fresh start", backend);
    EXPECT_EQ(refill.session.chain.size(), 1u);
}

TEST(Export, DialectSessionAndDeterminism) {
    auto scenario = load_scenario_file(test::fixture("dialect_fairness.scenario.json"));
    const auto result = run_scenario(scenario);
    ASSERT_TRUE(result.passed());
    const auto md = export_session(result.session, ExportFormat::Markdown);
    for (const auto& s : result.session.chain.steps()) EXPECT_NE(md.find(s.text), std::string::npos);
    EXPECT_EQ(result.session.chain.steps().back().ordinal, 9);
    for (const auto& t : scenario.turns) {
        if (t.utterance.starts_with("Replace")) EXPECT_NE(md.find(t.utterance), std::string::npos);
    }
    EXPECT_EQ(md, export_session(result.session, ExportFormat::Markdown));
    EXPECT_EQ(export_session(result.session, ExportFormat::Json), export_session(result.session, ExportFormat::Json));
}

TEST(Export, FreshSessionJson) {
    auto backend = load_script(four_step_script());
    const auto s = start_session("q", seeded(), backend).session;
    const auto doc = json::parse(export_session(s, ExportFormat::Json));
    EXPECT_EQ(doc["state"], "AwaitingReview");
    EXPECT_EQ(doc["edit_count"], 0);
    EXPECT_TRUE(doc["history"].empty());
}

TEST(Engine, OneDisclosurePerCall) {
    auto backend = load_script(four_step_script());
    Recording rec(backend);
    auto s = start_session("q", seeded(), rec).session;
    s = handle_utterance(s, "Replace Step 2 with: z", rec).session;
    s = handle_utterance(s, "Is there any bias in Step 2?", rec).session;
    EXPECT_EQ(s.transcript.count(EventKind::Disclosure), rec.bundles.size());
    EXPECT_EQ(s.transcript.count(EventKind::ModelOutput), rec.bundles.size());
}
