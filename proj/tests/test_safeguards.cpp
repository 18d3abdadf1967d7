#include <fstream>

#include <gtest/gtest.h>

#include "cocot/safeguards.hpp"
#include "support.hpp"

using namespace cocot;

TEST(DetectPii, EmailPreview) {
    const auto f = detect_pii("contact a.b@example.org");
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].kind, PiiKind::Email);
    EXPECT_EQ(f[0].start, 8u);
    EXPECT_EQ(f[0].end, 23u);
    // 15 characters, all but the last two masked.
    EXPECT_EQ(f[0].preview, std::string(13, '*') + "rg");
}

TEST(DetectPii, Empty) { EXPECT_TRUE(detect_pii("").empty()); }

TEST(DetectPii, CardsNeedLuhn) {
    const auto f = detect_pii("4111 1111 1111 1111");
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].kind, PiiKind::PaymentCard);
    EXPECT_EQ(f[0].end, 19u);
    EXPECT_TRUE(detect_pii("4111 1111 1111 1112").empty());
}

TEST(DetectPii, OtherKinds) {
    const auto phone = detect_pii("call (555) 201-3344 now");
    ASSERT_EQ(phone.size(), 1u);
    EXPECT_EQ(phone[0].kind, PiiKind::PhoneNumber);
    const auto ssn = detect_pii("ssn 078-05-1120.");
    ASSERT_EQ(ssn.size(), 1u);
    EXPECT_EQ(ssn[0].kind, PiiKind::NationalId);
    EXPECT_TRUE(detect_pii("born 1999-04-12").empty());
}

TEST(Luhn, Oracle) {
    EXPECT_TRUE(luhn_valid("4111111111111111"));
    EXPECT_TRUE(luhn_valid("79927398713"));
    EXPECT_FALSE(luhn_valid("79927398710"));
    EXPECT_FALSE(luhn_valid(""));
}

TEST(MaskPreview, Short) {
    EXPECT_EQ(mask_preview("ab"), "**");
    EXPECT_EQ(mask_preview("abc"), "*bc");
}

TEST(DetectPii, CorpusMatchesLabels) {
    std::ifstream in(test::fixture("pii_corpus.jsonl"));
    ASSERT_TRUE(in);
    std::string line;
    int lines = 0, positives = 0;
    while (std::getline(in, line)) {
        ++lines;
        const auto j = json::parse(line);
        const auto text = j["text"].get<std::string>();
        std::vector<std::tuple<std::string, std::size_t, std::size_t>> expected, actual;
        for (const auto& l : j["labels"]) {
            expected.emplace_back(l["kind"].get<std::string>(), l["start"].get<std::size_t>(),
                                  l["end"].get<std::size_t>());
        }
        for (const auto& f : detect_pii(text)) actual.emplace_back(std::string(to_string(f.kind)), f.start, f.end);
        if (!expected.empty()) ++positives;
        EXPECT_EQ(actual, expected) << text;
    }
    EXPECT_EQ(lines, 60);
    EXPECT_EQ(positives, 30);
}

TEST(Disclosure, FourLineBlock) {
    ModelMetadata m{"fixture-1", {{"temperature", 0.7}, {"n", 3}}, 0.82, 0};
    const auto d = build_disclosure(m);
    EXPECT_EQ(d.rendered, "Model disclosure:\nversion: fixture-1\nparameters: n=3, temperature=0.7\nconfidence: 0.82");
}

TEST(Disclosure, OptionalPartsOmitted) {
    ModelMetadata m{"fixture-1", {{"n", 1}}, std::nullopt, 0};
    EXPECT_EQ(build_disclosure(m).rendered, "Model disclosure:\nversion: fixture-1\nparameters: n=1");
    m.parameters.clear();
    EXPECT_EQ(build_disclosure(m).rendered, "Model disclosure:\nversion: fixture-1\nparameters: (none)");
    m.model_version.clear();
    EXPECT_CODE(build_disclosure(m), ErrorCode::Precondition);
}

TEST(BiasPrompt, EmbedsTrimmedStep) {
    ReasoningStep s;
    s.ordinal = 4;
    s.text = "  Analyze sources of disparity.\n ";
    const auto p = build_bias_prompt(s);
    EXPECT_TRUE(p.starts_with("Is there any bias in Step 4?\n\n[Step 4] Analyze sources of disparity.\n\nAudit Step 4"));
    EXPECT_EQ(p, build_bias_prompt(s));
}
