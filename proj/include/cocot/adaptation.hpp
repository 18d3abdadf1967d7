#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "cocot/chain.hpp"
#include "cocot/error.hpp"

namespace cocot {

inline constexpr std::size_t kFeatureCount = 6;

/// Style features of a text, each in [0,1]:
///   [0] length (tokens / 100, capped)
///   [1] counterexample-marker density   [2] assumption-marker density
///   [3] hedging density                 [4] question density
///   [5] evidence-marker density
/// Densities are marker occurrences per token, capped at 1.
struct FeatureVector {
    std::array<double, kFeatureCount> f{};
    bool operator==(const FeatureVector&) const = default;
};

struct PreferenceVector {
    std::array<double, kFeatureCount> p{};
    std::uint64_t update_count = 0;
    double alpha = 0.3;
    bool operator==(const PreferenceVector&) const = default;
};

struct EditRecord {
    std::string session_id;
    StepId step_id;
    std::string original;
    std::string revision;
    std::int64_t timestamp = 0;  // milliseconds since the Unix epoch
    bool operator==(const EditRecord&) const = default;
};

namespace lexicon {
inline const std::vector<std::string_view> kCounterexample = {"counterexample", "however", "but", "instead",
                                                              "unless"};
inline const std::vector<std::string_view> kAssumption = {"assume", "assumes", "suppose", "presumably",
                                                          "given that"};
inline const std::vector<std::string_view> kHedging = {"may", "might", "could", "possibly", "perhaps"};
inline const std::vector<std::string_view> kEvidence = {"e.g.", "for example", "such as", "studies", "evidence"};
}  // namespace lexicon

struct Token {
    std::string word;        // lowercased, trailing punctuation stripped
    bool question = false;   // raw token ended in '?'
};

/// Lowercase whitespace split; trailing punctuation is stripped and tokens
/// that are pure punctuation are dropped.
inline std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) {
            std::string raw(text.substr(i, j - i));
            Token t;
            std::size_t end = raw.size();
            while (end > 0 && std::ispunct(static_cast<unsigned char>(raw[end - 1]))) {
                if (raw[end - 1] == '?') t.question = true;
                --end;
            }
            raw.resize(end);
            for (auto& c : raw) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (!raw.empty()) {
                t.word = std::move(raw);
                out.push_back(std::move(t));
            }
        }
        i = j;
    }
    return out;
}

namespace detail {

inline std::size_t count_markers(const std::vector<Token>& tokens, const std::vector<std::string_view>& lexicon) {
    std::size_t count = 0;
    for (const auto& entry : lexicon) {
        const auto phrase = tokenize(entry);
        if (phrase.empty() || phrase.size() > tokens.size()) continue;
        for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
            bool hit = true;
            for (std::size_t k = 0; k < phrase.size() && hit; ++k) hit = tokens[i + k].word == phrase[k].word;
            if (hit) ++count;
        }
    }
    return count;
}

}  // namespace detail

inline FeatureVector extract_features(std::string_view text) {
    FeatureVector out;
    const auto tokens = tokenize(text);
    if (tokens.empty()) return out;
    const double n = static_cast<double>(tokens.size());
    auto density = [n](std::size_t markers) { return std::min(1.0, static_cast<double>(markers) / n); };
    const auto questions = static_cast<std::size_t>(
        std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return t.question; }));

    out.f[0] = std::min(1.0, n / 100.0);
    out.f[1] = density(detail::count_markers(tokens, lexicon::kCounterexample));
    out.f[2] = density(detail::count_markers(tokens, lexicon::kAssumption));
    out.f[3] = density(detail::count_markers(tokens, lexicon::kHedging));
    out.f[4] = density(questions);
    out.f[5] = density(detail::count_markers(tokens, lexicon::kEvidence));
    return out;
}

inline double score(const PreferenceVector& pref, const FeatureVector& features) {
    return std::inner_product(pref.p.begin(), pref.p.end(), features.f.begin(), 0.0);
}

/// Append-only log of (original, revision) pairs.
class EditLog {
public:
    void append(EditRecord record) { records_.push_back(std::move(record)); }
    [[nodiscard]] const std::vector<EditRecord>& records() const { return records_; }
    [[nodiscard]] std::size_t size() const { return records_.size(); }
    bool operator==(const EditLog&) const = default;

private:
    std::vector<EditRecord> records_;
};

/// Log the record and move the preference vector toward the record's feature
/// delta: p <- clamp((1 - alpha) p + alpha (phi(revision) - phi(original))).
inline PreferenceVector record_edit(EditLog& log, PreferenceVector pref, EditRecord record) {
    if (record.original == record.revision) {
        throw Error(ErrorCode::IdenticalTexts, "revision is identical to the original");
    }
    if (!(pref.alpha > 0.0 && pref.alpha <= 1.0)) throw Error(ErrorCode::Precondition, "alpha must be in (0,1]");
    const auto before = extract_features(record.original);
    const auto after = extract_features(record.revision);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        const double delta = after.f[i] - before.f[i];
        pref.p[i] = std::clamp((1.0 - pref.alpha) * pref.p[i] + pref.alpha * delta, -1.0, 1.0);
    }
    ++pref.update_count;
    log.append(std::move(record));
    return pref;
}

/// Stable descending sort by p . phi(candidate).
inline std::vector<std::string> rerank(std::vector<std::string> candidates, const PreferenceVector& pref) {
    if (candidates.empty()) throw Error(ErrorCode::Precondition, "nothing to rerank");
    std::vector<std::pair<double, std::size_t>> keyed;
    keyed.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        keyed.emplace_back(score(pref, extract_features(candidates[i])), i);
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> out;
    out.reserve(candidates.size());
    for (const auto& [s, i] : keyed) out.push_back(std::move(candidates[i]));
    return out;
}

/// Fixed directive lines, indexed by feature: {positive, negative}.
inline constexpr std::array<std::array<std::string_view, 2>, kFeatureCount> kDirectiveTable = {{
    {"Give fuller, more detailed steps.", "Keep each step short and focused."},
    {"Prefer concrete counterexamples over unexamined assumptions.",
     "State the main line of reasoning directly instead of arguing through counterexamples."},
    {"State the assumptions each step relies on explicitly.", "Avoid introducing unexamined assumptions."},
    {"Acknowledge uncertainty where it exists.", "State conclusions directly without hedging."},
    {"Pose guiding questions that invite the user to reflect.", "Avoid rhetorical questions."},
    {"Support claims with concrete examples or evidence.", "Keep the argument concise rather than piling on examples."},
}};

inline std::vector<std::string> synthesize_directives(const PreferenceVector& pref, double theta = 0.25) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (pref.p[i] > theta) {
            out.emplace_back(kDirectiveTable[i][0]);
        } else if (pref.p[i] < -theta) {
            out.emplace_back(kDirectiveTable[i][1]);
        }
    }
    return out;
}

}  // namespace cocot
