#pragma once

#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cocot/chain.hpp"
#include "cocot/error.hpp"

namespace cocot {

/// The interactive-reasoning system prompt, sent verbatim on every call.
inline constexpr std::string_view kSystemPrompt = R"A1(You are an Interactive Reasoning Assistant designed to guide users through a transparent, multi-step reasoning process.

Your goal is to expose your chain-of-thought reasoning in numbered steps and allow the user to review and modify any step before you generate a final answer.

You must follow this exact workflow:

1. Generate a clear, step-by-step reasoning chain (label each with [Step 1], [Step 2], etc.).
2. Present the full reasoning chain to the user and ask if they would like to edit, delete, or replace any step.
3. If the user provides an edit:
 - Acknowledge the edit.
 - Update the modified step.
 - Automatically re-calculate any logically dependent downstream steps.
 - Show the updated reasoning chain.
 - Ask if further changes are needed.
4. If the user confirms the chain (e.g., says "Continue"), proceed to generate the final answer based strictly on the most recent version of the reasoning chain.

Important constraints:

- Never finalize an answer until the user explicitly confirms the reasoning chain.
- Always number steps and allow edits by number (e.g., "Replace Step 3 with...").
- When updating the chain, only modify what logically depends on the user's change.
- Encourage critical review with language such as: "Would you like to revise or reframe any of these steps?"

Do not assume the user wants to continue unless they clearly state so.

At the end, optionally offer to export the reasoning chain and final answer.)A1";

/// SHA-256 of kSystemPrompt, pinned so accidental edits to the template are caught.
inline constexpr std::string_view kSystemPromptSha256 =
    "2d82dbfdf0dfff0823c2ae1a4c5bfccc30bc137f06be29dffad235380563dad3";

inline constexpr std::string_view kReviewQuestion =
    "Do you want to edit any step before I generate the final answer?";

enum class PromptPurpose { InitialDraft, RegenerateStale, FinalAnswer, BiasAudit };

inline std::string_view to_string(PromptPurpose p) {
    switch (p) {
        case PromptPurpose::InitialDraft: return "InitialDraft";
        case PromptPurpose::RegenerateStale: return "RegenerateStale";
        case PromptPurpose::FinalAnswer: return "FinalAnswer";
        case PromptPurpose::BiasAudit: return "BiasAudit";
    }
    return "InitialDraft";
}

inline PromptPurpose prompt_purpose_from_string(std::string_view s) {
    for (auto p : {PromptPurpose::InitialDraft, PromptPurpose::RegenerateStale, PromptPurpose::FinalAnswer,
                   PromptPurpose::BiasAudit}) {
        if (to_string(p) == s) return p;
    }
    throw Error(ErrorCode::FixtureSchemaError, "unknown purpose '" + std::string(s) + "'");
}

/// Everything a backend needs for one completion. `purpose`, `focus` and
/// `turn` identify the request for deterministic (scripted) backends.
struct PromptBundle {
    std::string system;
    std::string context;
    std::string instruction;
    std::vector<std::string> directives;

    PromptPurpose purpose = PromptPurpose::InitialDraft;
    std::vector<int> focus;
    int turn = 0;

    /// System message as sent on the wire: the template plus numbered style notes.
    [[nodiscard]] std::string system_message() const {
        std::string out = system;
        if (!directives.empty()) {
            out += "\n\nStyle notes learned from this user's revisions:";
            for (std::size_t i = 0; i < directives.size(); ++i) {
                out += "\n" + std::to_string(i + 1) + ". " + directives[i];
            }
        }
        return out;
    }

    [[nodiscard]] std::string user_message() const {
        return context.empty() ? instruction : context + "\n\n" + instruction;
    }
};

/// Steps parsed from a model reply, plus whatever prose preceded the first marker.
struct ParsedSteps {
    std::vector<std::pair<int, std::string>> steps;
    std::string preamble;
};

/// Split raw model output on line-anchored "[Step N]" markers. A marker that
/// does not start a line is ordinary step text.
inline ParsedSteps parse_steps(std::string_view text) {
    static const std::regex marker(R"(^\[Step ([0-9]{1,9})\][ \t]?)");
    ParsedSteps out;
    std::set<int> seen;
    std::string current;
    bool in_step = false;

    auto flush = [&] {
        if (in_step) {
            out.steps.back().second = trim(current);
        } else {
            out.preamble = trim(current);
        }
        current.clear();
    };

    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string line(text.substr(pos, nl - pos));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::smatch m;
        if (std::regex_search(line, m, marker, std::regex_constants::match_continuous)) {
            const int ordinal = std::stoi(m[1].str());
            flush();
            if (seen.contains(ordinal)) {
                throw Error(ErrorCode::DuplicateOrdinal, "Step " + std::to_string(ordinal) + " appears twice");
            }
            if (!out.steps.empty() && ordinal < out.steps.back().first) {
                throw Error(ErrorCode::NonIncreasingOrdinals,
                            "Step " + std::to_string(ordinal) + " follows Step " +
                                std::to_string(out.steps.back().first));
            }
            seen.insert(ordinal);
            out.steps.emplace_back(ordinal, std::string{});
            in_step = true;
            current = line.substr(static_cast<std::size_t>(m.length(0)));
        } else {
            current += '\n';
            current += line;
        }
        pos = nl + 1;
    }
    flush();
    if (out.steps.empty()) throw Error(ErrorCode::NoStepsFound, "no [Step N] markers in model output");
    return out;
}

inline ReasoningChain parse_chain(std::string_view text) {
    const auto parsed = parse_steps(text);
    return new_chain(std::span<const std::pair<int, std::string>>(parsed.steps));
}

/// Canonical text form: "[Step N] text" blocks separated by one blank line.
inline std::string render_chain(const ReasoningChain& chain) {
    std::string out;
    for (const auto& step : chain.steps()) {
        if (!out.empty()) out += "\n\n";
        out += "[Step " + std::to_string(step.ordinal) + "] " + step.text;
    }
    return out;
}

}  // namespace cocot
