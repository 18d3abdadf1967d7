#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cocot/edit_command.hpp"
#include "cocot/error.hpp"

namespace cocot {

/// Opaque step identity. Monotonic within a session and never reused, so it
/// survives renumbering of the display ordinals.
struct StepId {
    std::uint64_t value = 0;
    auto operator<=>(const StepId&) const = default;
};

enum class StepStatus { Fresh, Stale, UserEdited };
enum class Provenance { ModelGenerated, UserAuthored };

inline std::string_view to_string(StepStatus s) {
    switch (s) {
        case StepStatus::Fresh: return "Fresh";
        case StepStatus::Stale: return "Stale";
        case StepStatus::UserEdited: return "UserEdited";
    }
    return "Fresh";
}

inline std::string_view to_string(Provenance p) {
    return p == Provenance::ModelGenerated ? "ModelGenerated" : "UserAuthored";
}

struct ReasoningStep {
    StepId id;
    int ordinal = 0;
    std::string text;
    StepStatus status = StepStatus::Fresh;
    Provenance provenance = Provenance::ModelGenerated;

    bool operator==(const ReasoningStep&) const = default;
};

inline std::string trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

/// Edge (from, to) means `to` logically depends on `from`.
class DependencyGraph {
public:
    using Edge = std::pair<StepId, StepId>;

    void add_node(StepId id) { nodes_.insert(id); }

    void add_edge(StepId from, StepId to) {
        if (!contains(from) || !contains(to)) {
            throw Error(ErrorCode::UnknownStep, "edge endpoint is not a live step");
        }
        if (from == to) throw Error(ErrorCode::CyclicDependency, "self edge");
        edges_.insert({from, to});
    }

    void remove_node(StepId id) {
        nodes_.erase(id);
        std::erase_if(edges_, [id](const Edge& e) { return e.first == id || e.second == id; });
    }

    [[nodiscard]] bool contains(StepId id) const { return nodes_.contains(id); }
    [[nodiscard]] const std::set<StepId>& nodes() const { return nodes_; }
    [[nodiscard]] const std::set<Edge>& edges() const { return edges_; }

    [[nodiscard]] std::vector<StepId> successors(StepId id) const {
        std::vector<StepId> out;
        for (auto it = edges_.lower_bound({id, StepId{0}}); it != edges_.end() && it->first == id; ++it) {
            out.push_back(it->second);
        }
        return out;
    }

    [[nodiscard]] std::vector<StepId> predecessors(StepId id) const {
        std::vector<StepId> out;
        for (const auto& [from, to] : edges_) {
            if (to == id) out.push_back(from);
        }
        return out;
    }

    [[nodiscard]] bool is_acyclic() const {
        // Kahn's algorithm.
        std::map<StepId, int> indegree;
        for (auto n : nodes_) indegree[n] = 0;
        for (const auto& e : edges_) ++indegree[e.second];
        std::deque<StepId> ready;
        for (const auto& [n, d] : indegree) {
            if (d == 0) ready.push_back(n);
        }
        std::size_t seen = 0;
        while (!ready.empty()) {
            const StepId n = ready.front();
            ready.pop_front();
            ++seen;
            for (StepId s : successors(n)) {
                if (--indegree[s] == 0) ready.push_back(s);
            }
        }
        return seen == nodes_.size();
    }

    bool operator==(const DependencyGraph&) const = default;

private:
    std::set<StepId> nodes_;
    std::set<Edge> edges_;
};

/// Transitive closure of out-edges from `id`; never contains `id` itself.
inline std::set<StepId> descendants(const DependencyGraph& graph, StepId id) {
    if (!graph.contains(id)) throw Error(ErrorCode::UnknownStep, "step is not in the graph");
    std::set<StepId> seen;
    std::deque<StepId> frontier{id};
    while (!frontier.empty()) {
        const StepId cur = frontier.front();
        frontier.pop_front();
        for (StepId next : graph.successors(cur)) {
            if (next != id && seen.insert(next).second) frontier.push_back(next);
        }
    }
    return seen;
}

/// How edges are created for a new chain. Linear: every step depends on all
/// earlier steps. Explicit: edges are supplied by the caller.
enum class DependencyPolicy { Linear, Explicit };

class ReasoningChain {
public:
    ReasoningChain() = default;

    [[nodiscard]] std::span<const ReasoningStep> steps() const { return steps_; }
    [[nodiscard]] const DependencyGraph& graph() const { return graph_; }
    [[nodiscard]] DependencyPolicy policy() const { return policy_; }
    [[nodiscard]] std::uint64_t next_id() const { return next_id_; }
    [[nodiscard]] std::size_t size() const { return steps_.size(); }
    [[nodiscard]] bool empty() const { return steps_.empty(); }

    [[nodiscard]] std::optional<std::size_t> index_of(StepId id) const {
        for (std::size_t i = 0; i < steps_.size(); ++i) {
            if (steps_[i].id == id) return i;
        }
        return std::nullopt;
    }

    [[nodiscard]] std::optional<std::size_t> index_of_ordinal(int ordinal) const {
        for (std::size_t i = 0; i < steps_.size(); ++i) {
            if (steps_[i].ordinal == ordinal) return i;
        }
        return std::nullopt;
    }

    [[nodiscard]] const ReasoningStep& at(StepId id) const {
        const auto i = index_of(id);
        if (!i) throw Error(ErrorCode::UnknownStep, "no step with id " + std::to_string(id.value));
        return steps_[*i];
    }

    [[nodiscard]] const ReasoningStep& at_ordinal(int ordinal) const {
        const auto i = index_of_ordinal(ordinal);
        if (!i) throw Error(ErrorCode::UnknownStep, "no Step " + std::to_string(ordinal));
        return steps_[*i];
    }

    [[nodiscard]] bool has_stale() const {
        return std::any_of(steps_.begin(), steps_.end(),
                           [](const ReasoningStep& s) { return s.status == StepStatus::Stale; });
    }

    /// Replace the default edges with an explicit set. Edges must point from
    /// an earlier list position to a later one.
    void set_explicit_edges(std::span<const DependencyGraph::Edge> edges) {
        DependencyGraph g;
        for (const auto& s : steps_) g.add_node(s.id);
        for (const auto& [from, to] : edges) {
            const auto fi = index_of(from);
            const auto ti = index_of(to);
            if (!fi || !ti) throw Error(ErrorCode::UnknownStep, "edge endpoint is not a live step");
            if (*fi >= *ti) throw Error(ErrorCode::CyclicDependency, "edges must point forward in the chain");
            g.add_edge(from, to);
        }
        graph_ = std::move(g);
        policy_ = DependencyPolicy::Explicit;
    }

    /// Overwrite the text of a step produced by regeneration; identity and
    /// ordinal are kept, status returns to Fresh.
    void set_regenerated_text(StepId id, std::string text) {
        auto& s = mutable_at(id);
        s.text = std::move(text);
        s.status = StepStatus::Fresh;
        s.provenance = Provenance::ModelGenerated;
    }

    void mark_stale(StepId id) { mutable_at(id).status = StepStatus::Stale; }

    /// Raw reconstruction used by deserialization; validates invariants.
    static ReasoningChain from_parts(std::vector<ReasoningStep> steps, std::set<DependencyGraph::Edge> edges,
                                     DependencyPolicy policy, std::uint64_t next_id) {
        ReasoningChain c;
        c.policy_ = policy;
        c.next_id_ = next_id;
        for (auto& s : steps) {
            if (s.id.value >= next_id) throw Error(ErrorCode::Precondition, "step id not below next_id");
            c.graph_.add_node(s.id);
        }
        c.steps_ = std::move(steps);
        c.check_ordinals();
        for (const auto& [from, to] : edges) {
            const auto fi = c.index_of(from);
            const auto ti = c.index_of(to);
            if (!fi || !ti) throw Error(ErrorCode::UnknownStep, "edge endpoint is not a live step");
            if (*fi >= *ti) throw Error(ErrorCode::CyclicDependency, "edges must point forward in the chain");
            c.graph_.add_edge(from, to);
        }
        return c;
    }

    bool operator==(const ReasoningChain&) const = default;

private:
    friend ReasoningChain new_chain(std::span<const std::pair<int, std::string>> steps);
    friend struct EditApplier;

    ReasoningStep& mutable_at(StepId id) {
        const auto i = index_of(id);
        if (!i) throw Error(ErrorCode::UnknownStep, "no step with id " + std::to_string(id.value));
        return steps_[*i];
    }

    StepId fresh_id() { return StepId{next_id_++}; }

    void check_ordinals() const {
        for (std::size_t i = 0; i < steps_.size(); ++i) {
            if (steps_[i].ordinal <= 0) throw Error(ErrorCode::Precondition, "ordinals must be positive");
            if (trim(steps_[i].text).empty()) throw Error(ErrorCode::EmptyStepText, "step text is empty");
            if (i > 0 && steps_[i].ordinal <= steps_[i - 1].ordinal) {
                throw Error(steps_[i].ordinal == steps_[i - 1].ordinal ? ErrorCode::DuplicateOrdinal
                                                                       : ErrorCode::NonIncreasingOrdinals,
                            "ordinals must strictly increase");
            }
        }
    }

    void renumber() {
        int n = 0;
        for (auto& s : steps_) s.ordinal = ++n;
    }

    std::vector<ReasoningStep> steps_;
    DependencyGraph graph_;
    DependencyPolicy policy_ = DependencyPolicy::Linear;
    std::uint64_t next_id_ = 1;
};

/// Build a chain from (ordinal, text) pairs with fresh ids and linear
/// dependencies. Ordinal gaps are kept as given.
inline ReasoningChain new_chain(std::span<const std::pair<int, std::string>> steps) {
    ReasoningChain c;
    for (const auto& [ordinal, text] : steps) {
        if (trim(text).empty()) throw Error(ErrorCode::EmptyStepText, "step text is empty");
        if (!c.steps_.empty() && ordinal == c.steps_.back().ordinal) {
            throw Error(ErrorCode::DuplicateOrdinal, "duplicate Step " + std::to_string(ordinal));
        }
        if (ordinal <= 0 || (!c.steps_.empty() && ordinal < c.steps_.back().ordinal)) {
            throw Error(ErrorCode::NonIncreasingOrdinals, "ordinals must be positive and strictly increasing");
        }
        ReasoningStep s;
        s.id = c.fresh_id();
        s.ordinal = ordinal;
        s.text = text;
        c.graph_.add_node(s.id);
        for (const auto& earlier : c.steps_) c.graph_.add_edge(earlier.id, s.id);
        c.steps_.push_back(std::move(s));
    }
    return c;
}

inline ReasoningChain new_chain(std::initializer_list<std::pair<int, std::string>> steps) {
    const std::vector<std::pair<int, std::string>> v(steps);
    return new_chain(std::span<const std::pair<int, std::string>>(v));
}

namespace resolved {
struct Replace {
    StepId target;
    std::string text;
};
struct Delete {
    StepId target;
};
struct Merge {
    StepId first;
    StepId second;
};
/// nullopt inserts at the front.
struct Insert {
    std::optional<StepId> after;
    std::string text;
};
}  // namespace resolved

/// A structural command whose ordinal targets have been bound to step ids.
struct ResolvedEdit {
    std::variant<resolved::Replace, resolved::Delete, resolved::Merge, resolved::Insert> kind;
    Scope scope = Scope::Cascade;
};

/// Bind ordinal targets to the ids they denote in `chain` as currently
/// displayed. Throws UnknownStep, NotStructural or EmptyReplacementText.
inline ResolvedEdit resolve(const ReasoningChain& chain, const EditCommand& command) {
    auto id_of = [&](int ordinal) { return chain.at_ordinal(ordinal).id; };
    ResolvedEdit out;
    out.scope = command.scope;
    if (const auto* r = std::get_if<cmd::Replace>(&command.kind)) {
        if (trim(r->text).empty()) throw Error(ErrorCode::EmptyReplacementText, "replacement text is empty");
        out.kind = resolved::Replace{id_of(r->target), trim(r->text)};
    } else if (const auto* d = std::get_if<cmd::Delete>(&command.kind)) {
        out.kind = resolved::Delete{id_of(d->target)};
    } else if (const auto* m = std::get_if<cmd::Merge>(&command.kind)) {
        out.kind = resolved::Merge{id_of(m->first), id_of(m->second)};
    } else if (const auto* ins = std::get_if<cmd::Insert>(&command.kind)) {
        if (trim(ins->text).empty()) throw Error(ErrorCode::EmptyReplacementText, "inserted text is empty");
        std::optional<StepId> after;
        if (ins->after != 0) after = id_of(ins->after);
        out.kind = resolved::Insert{after, trim(ins->text)};
    } else {
        throw Error(ErrorCode::NotStructural, "command does not edit the chain");
    }
    return out;
}

struct EditResult {
    ReasoningChain chain;
    /// Steps marked Stale by this edit.
    std::set<StepId> invalidated;
    /// Steps whose text the user authored in this edit (replaced, merged or inserted).
    std::set<StepId> edited;
};

struct EditApplier {
    static EditResult apply(ReasoningChain chain, const ResolvedEdit& edit) {
        EditResult result;
        std::optional<StepId> origin;  // node whose descendants get invalidated
        bool structural = true;

        if (const auto* r = std::get_if<resolved::Replace>(&edit.kind)) {
            auto& step = chain.mutable_at(r->target);
            step.text = r->text;
            step.status = StepStatus::UserEdited;
            step.provenance = Provenance::UserAuthored;
            result.edited.insert(step.id);
            origin = step.id;
            structural = false;
        } else if (const auto* d = std::get_if<resolved::Delete>(&edit.kind)) {
            const auto idx = chain.index_of(d->target);
            if (!idx) throw Error(ErrorCode::UnknownStep, "deleted step is not live");
            if (edit.scope == Scope::Cascade) result.invalidated = descendants(chain.graph_, d->target);
            const auto preds = chain.graph_.predecessors(d->target);
            const auto succs = chain.graph_.successors(d->target);
            chain.graph_.remove_node(d->target);
            for (StepId p : preds) {
                for (StepId s : succs) chain.graph_.add_edge(p, s);
            }
            chain.steps_.erase(chain.steps_.begin() + static_cast<std::ptrdiff_t>(*idx));
        } else if (const auto* m = std::get_if<resolved::Merge>(&edit.kind)) {
            auto a = chain.index_of(m->first);
            auto b = chain.index_of(m->second);
            if (!a || !b) throw Error(ErrorCode::UnknownStep, "merged step is not live");
            if (*a > *b) std::swap(a, b);
            if (*b != *a + 1) throw Error(ErrorCode::MergeNonAdjacent, "only adjacent steps can be merged");
            const StepId first = chain.steps_[*a].id;
            const StepId second = chain.steps_[*b].id;
            std::set<StepId> preds;
            std::set<StepId> succs;
            for (StepId x : {first, second}) {
                for (StepId p : chain.graph_.predecessors(x)) preds.insert(p);
                for (StepId s : chain.graph_.successors(x)) succs.insert(s);
            }
            preds.erase(first);
            preds.erase(second);
            succs.erase(first);
            succs.erase(second);

            ReasoningStep merged;
            merged.id = chain.fresh_id();
            merged.ordinal = chain.steps_[*a].ordinal;
            merged.text = chain.steps_[*a].text + "\n\n" + chain.steps_[*b].text;
            merged.status = StepStatus::UserEdited;
            merged.provenance = Provenance::UserAuthored;

            chain.graph_.remove_node(first);
            chain.graph_.remove_node(second);
            chain.graph_.add_node(merged.id);
            for (StepId p : preds) chain.graph_.add_edge(p, merged.id);
            for (StepId s : succs) chain.graph_.add_edge(merged.id, s);

            chain.steps_.erase(chain.steps_.begin() + static_cast<std::ptrdiff_t>(*b));
            chain.steps_[*a] = merged;
            result.edited.insert(merged.id);
            origin = merged.id;
        } else {
            const auto& ins = std::get<resolved::Insert>(edit.kind);
            std::size_t pos = 0;
            if (ins.after) {
                const auto idx = chain.index_of(*ins.after);
                if (!idx) throw Error(ErrorCode::UnknownStep, "anchor step is not live");
                pos = *idx + 1;
            }
            ReasoningStep step;
            step.id = chain.fresh_id();
            step.ordinal = 0;
            step.text = ins.text;
            step.status = StepStatus::UserEdited;
            step.provenance = Provenance::UserAuthored;
            chain.graph_.add_node(step.id);
            for (std::size_t i = 0; i < chain.steps_.size(); ++i) {
                if (i < pos) {
                    chain.graph_.add_edge(chain.steps_[i].id, step.id);
                } else {
                    chain.graph_.add_edge(step.id, chain.steps_[i].id);
                }
            }
            chain.steps_.insert(chain.steps_.begin() + static_cast<std::ptrdiff_t>(pos), step);
            result.edited.insert(step.id);
            origin = step.id;
        }

        if (origin && edit.scope == Scope::Cascade) result.invalidated = descendants(chain.graph_, *origin);
        for (StepId id : result.invalidated) {
            if (!result.edited.contains(id)) chain.mutable_at(id).status = StepStatus::Stale;
        }
        if (structural) chain.renumber();
        result.chain = std::move(chain);
        return result;
    }

    static EditResult apply_batch(ReasoningChain chain, std::span<const ResolvedEdit> edits) {
        EditResult total;
        total.chain = std::move(chain);
        for (const auto& e : edits) {
            EditResult step = apply(std::move(total.chain), e);
            total.chain = std::move(step.chain);
            total.invalidated.insert(step.invalidated.begin(), step.invalidated.end());
            total.edited.insert(step.edited.begin(), step.edited.end());
        }
        std::erase_if(total.edited, [&](StepId id) { return !total.chain.index_of(id); });
        for (StepId id : total.edited) total.chain.mutable_at(id).status = StepStatus::UserEdited;
        std::erase_if(total.invalidated, [&](StepId id) {
            const auto idx = total.chain.index_of(id);
            return !idx || total.chain.steps_[*idx].status != StepStatus::Stale;
        });
        return total;
    }
};

inline EditResult apply_edit(ReasoningChain chain, const ResolvedEdit& edit) {
    return EditApplier::apply(std::move(chain), edit);
}

inline EditResult apply_edit(ReasoningChain chain, const EditCommand& command) {
    const ResolvedEdit edit = resolve(chain, command);
    return EditApplier::apply(std::move(chain), edit);
}

/// Apply several commands addressed against the same displayed chain: all
/// ordinals are resolved up front, then applied in order. The invalidated set
/// is the union over the batch restricted to surviving steps the user did not
/// author in this batch.
inline EditResult apply_edits(ReasoningChain chain, std::span<const EditCommand> commands) {
    std::vector<ResolvedEdit> edits;
    edits.reserve(commands.size());
    for (const auto& c : commands) edits.push_back(resolve(chain, c));
    return EditApplier::apply_batch(std::move(chain), edits);
}

}  // namespace cocot
