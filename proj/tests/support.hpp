#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cocot/chain.hpp"
#include "cocot/error.hpp"

// Expects `expr` to throw cocot::Error carrying `code`.
#define EXPECT_CODE(expr, code)                                                              \
    EXPECT_EQ(::cocot::test::code_of([&] { (void)(expr); }), std::optional<::cocot::ErrorCode>(code))

namespace cocot::test {

template <typename F>
std::optional<ErrorCode> code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(COCOT_FIXTURE_DIR) / name;
}

/// Transitive closure by Warshall's algorithm; independent of the BFS used in
/// the library.
inline std::set<StepId> reachable(const DependencyGraph& g, StepId from) {
    std::vector<StepId> nodes(g.nodes().begin(), g.nodes().end());
    std::map<StepId, std::size_t> index;
    for (std::size_t i = 0; i < nodes.size(); ++i) index[nodes[i]] = i;
    const std::size_t n = nodes.size();
    std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
    for (const auto& [a, b] : g.edges()) r[index.at(a)][index.at(b)] = true;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (r[i][k])
                for (std::size_t j = 0; j < n; ++j)
                    if (r[k][j]) r[i][j] = true;
    std::set<StepId> out;
    const std::size_t f = index.at(from);
    for (std::size_t j = 0; j < n; ++j)
        if (r[f][j]) out.insert(nodes[j]);
    return out;
}

inline std::string random_word(std::mt19937_64& rng) {
    static const std::vector<std::string> words{"data",  "dialect", "fairness", "however", "assume", "model",
                                                "may",   "such as", "evidence", "bias",    "metric", "users",
                                                "train", "e.g.",    "review",   "but",     "step",   "Step"};
    return words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)];
}

inline std::string random_text(std::mt19937_64& rng, int min_words = 1, int max_words = 12) {
    const int n = std::uniform_int_distribution<int>(min_words, max_words)(rng);
    std::string s;
    for (int i = 0; i < n; ++i) {
        if (i) s += ' ';
        s += random_word(rng);
    }
    return s;
}

/// Chain with ordinals 1..n and a random forward-edge graph.
inline ReasoningChain random_dag_chain(std::mt19937_64& rng, int max_nodes) {
    const int n = std::uniform_int_distribution<int>(1, max_nodes)(rng);
    std::vector<std::pair<int, std::string>> steps;
    for (int i = 1; i <= n; ++i) steps.emplace_back(i, random_text(rng));
    auto c = new_chain(std::span<const std::pair<int, std::string>>(steps));
    const double density = std::uniform_real_distribution<double>(0.0, 0.7)(rng);
    std::bernoulli_distribution coin(density);
    std::vector<DependencyGraph::Edge> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (coin(rng)) edges.push_back({c.steps()[i].id, c.steps()[j].id});
    c.set_explicit_edges(edges);
    return c;
}

/// A structural command whose targets exist in `c`.
inline EditCommand random_structural(std::mt19937_64& rng, const ReasoningChain& c) {
    const int n = static_cast<int>(c.size());
    auto pick = [&] { return c.steps()[std::uniform_int_distribution<int>(0, n - 1)(rng)].ordinal; };
    const Scope scope = std::bernoulli_distribution(0.25)(rng) ? Scope::Local : Scope::Cascade;
    switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
        case 0: return {cmd::Replace{pick(), random_text(rng)}, scope};
        case 1: return {cmd::Delete{pick()}, scope};
        case 2:
            if (n >= 2) {
                const int i = std::uniform_int_distribution<int>(0, n - 2)(rng);
                return {cmd::Merge{c.steps()[i].ordinal, c.steps()[i + 1].ordinal}, scope};
            }
            return {cmd::Replace{pick(), random_text(rng)}, scope};
        default: {
            const int after = std::bernoulli_distribution(0.2)(rng) ? 0 : pick();
            return {cmd::Insert{after, random_text(rng)}, scope};
        }
    }
}

}  // namespace cocot::test
