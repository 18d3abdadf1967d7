#pragma once

#include <cctype>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "cocot/chain.hpp"
#include "cocot/edit_command.hpp"

namespace cocot {

namespace detail {

inline std::optional<int> parse_ordinal(const std::string& digits, bool allow_zero = false) {
    if (digits.empty() || digits.size() > 9) return std::nullopt;
    const int v = std::stoi(digits);
    if (v < 0 || (v == 0 && !allow_zero)) return std::nullopt;
    return v;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline bool is_confirmation(const std::string& clause) {
    static const std::regex sentence_start(R"(^(continue|proceed|looks good)([^a-z]|$))");
    static const std::regex mentions_step(R"((^|[^a-z])steps?([^a-z]|$))");
    const std::string text = lower(clause);
    bool any = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find_first_of(".!", pos);
        if (end == std::string::npos) end = text.size();
        const std::string sentence = trim(std::string_view(text).substr(pos, end - pos));
        if (!sentence.empty()) {
            if (!std::regex_search(sentence, sentence_start) || std::regex_search(sentence, mentions_step)) {
                return false;
            }
            any = true;
        }
        pos = end + 1;
    }
    return any;
}

/// One clause of the keyword grammar, or nullopt when it is not a command.
inline std::optional<EditCommand> parse_clause(const std::string& raw, Scope default_scope) {
    using std::regex;
    constexpr auto flags = regex::ECMAScript | regex::icase;
    static const regex replace_re(R"(^(?:yes,?\s+)?replace\s+(only\s+)?step\s+([0-9]+)\s+with\s*:?\s*([\s\S]*\S)\s*$)", flags);
    static const regex delete_re(R"(^(?:delete|remove)\s+(only\s+)?step\s+([0-9]+)\s*[.!]*$)", flags);
    static const regex merge_re(R"(^merge\s+(only\s+)?steps?\s+([0-9]+)\s+(?:and|&)\s+([0-9]+)\s*[.!]*$)", flags);
    static const regex insert_re(R"(^insert\s+after\s+(only\s+)?step\s+([0-9]+)\s*:\s*([\s\S]*\S)\s*$)", flags);
    static const regex bias_re(R"(^is\s+there\s+(?:any\s+)?bias\s+in\s+step\s+([0-9]+)\s*[?.!]*$)", flags);
    static const regex export_re(R"(^export(?:\s+(?:as\s+)?(markdown|json))?\s*[.!]*$)", flags);

    const std::string clause = trim(raw);
    if (clause.empty()) return std::nullopt;
    std::smatch m;
    auto scope_of = [&](const std::ssub_match& only) { return only.matched ? Scope::Local : default_scope; };

    if (std::regex_match(clause, m, replace_re)) {
        const auto n = parse_ordinal(m[2].str());
        if (!n) return std::nullopt;
        return EditCommand{cmd::Replace{*n, m[3].str()}, scope_of(m[1])};
    }
    if (std::regex_match(clause, m, delete_re)) {
        const auto n = parse_ordinal(m[2].str());
        if (!n) return std::nullopt;
        return EditCommand{cmd::Delete{*n}, scope_of(m[1])};
    }
    if (std::regex_match(clause, m, merge_re)) {
        const auto a = parse_ordinal(m[2].str());
        const auto b = parse_ordinal(m[3].str());
        if (!a || !b) return std::nullopt;
        return EditCommand{cmd::Merge{*a, *b}, scope_of(m[1])};
    }
    if (std::regex_match(clause, m, insert_re)) {
        const auto n = parse_ordinal(m[2].str(), /*allow_zero=*/true);
        if (!n) return std::nullopt;
        return EditCommand{cmd::Insert{*n, m[3].str()}, scope_of(m[1])};
    }
    if (std::regex_match(clause, m, bias_re)) {
        const auto n = parse_ordinal(m[1].str());
        if (!n) return std::nullopt;
        return EditCommand{cmd::BiasCheck{*n}, default_scope};
    }
    if (std::regex_match(clause, m, export_re)) {
        const bool json = m[1].matched && lower(m[1].str()) == "json";
        return EditCommand{cmd::Export{json ? ExportFormat::Json : ExportFormat::Markdown}, default_scope};
    }
    if (is_confirmation(clause)) return EditCommand{cmd::Confirm{}, default_scope};
    return std::nullopt;
}

}  // namespace detail

/// Parse a user utterance into an ordered command list. Never fails: text the
/// grammar does not recognize becomes a single Freeform command.
///
/// Grammar (case-insensitive):
///   replace step N with: T        delete|remove step N
///   merge steps A and B           insert after step N: T   (N = 0 inserts first)
///   continue | proceed | looks good
///   is there any bias in step N   export [as markdown|json]
/// "only" before "step" gives the clause Local scope. Clauses joined by the
/// literal " and " are split when every part is a recognized clause; the
/// leftmost-shortest such split wins.
inline std::vector<EditCommand> parse_command(std::string_view utterance, Scope default_scope = Scope::Cascade) {
    const std::string text(utterance);
    const std::string low = detail::lower(text);

    // Segment boundaries at each " and ".
    std::vector<std::pair<std::size_t, std::size_t>> segments;
    std::size_t start = 0;
    for (std::size_t pos = low.find(" and "); pos != std::string::npos; pos = low.find(" and ", pos + 1)) {
        segments.emplace_back(start, pos);
        start = pos + 5;
    }
    segments.emplace_back(start, text.size());

    const std::size_t k = segments.size();
    // memo[i]: parse of segments i..k-1, empty optional when impossible.
    std::vector<std::optional<std::optional<std::vector<EditCommand>>>> memo(k + 1);
    memo[k] = std::vector<EditCommand>{};

    auto solve = [&](auto&& self, std::size_t i) -> const std::optional<std::vector<EditCommand>>& {
        if (memo[i]) return *memo[i];
        std::optional<std::vector<EditCommand>> best;
        for (std::size_t j = i; j < k && !best; ++j) {
            const auto b = segments[i].first;
            const auto e = segments[j].second;
            auto head = detail::parse_clause(text.substr(b, e - b), default_scope);
            if (!head) continue;
            const auto& rest = self(self, j + 1);
            if (!rest) continue;
            std::vector<EditCommand> all{*head};
            all.insert(all.end(), rest->begin(), rest->end());
            best = std::move(all);
        }
        memo[i] = std::move(best);
        return *memo[i];
    };

    const auto& parsed = solve(solve, 0);
    if (parsed && !parsed->empty()) return *parsed;
    return {EditCommand{cmd::Freeform{text}, default_scope}};
}

}  // namespace cocot
