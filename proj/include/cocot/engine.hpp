#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <stop_token>
#include <string>
#include <vector>

#include "cocot/adaptation.hpp"
#include "cocot/chain.hpp"
#include "cocot/command_parser.hpp"
#include "cocot/model.hpp"
#include "cocot/prompt.hpp"
#include "cocot/safeguards.hpp"
#include "cocot/serialize.hpp"
#include "cocot/session.hpp"

namespace cocot {

struct EngineOutcome {
    Session session;
    std::vector<std::string> messages;
    bool finished = false;
};

struct EngineOptions {
    /// Abandoning a request: the engine throws Cancelled and the caller keeps
    /// its previous session value.
    std::stop_token stop;
    /// Milliseconds since the epoch, stamped on edit records.
    std::function<std::int64_t()> clock;
    /// Seed for the preference vector (persistent profile); zero otherwise.
    std::optional<PreferenceVector> initial_preference;
};

inline constexpr std::string_view kExportOffer =
    "Would you like to export the reasoning chain and final answer? "
    "Reply \"export as markdown\" or \"export as json\".";

std::string export_session(const Session& session, ExportFormat format);

namespace detail {

inline std::int64_t now_ms(const EngineOptions& opts) {
    if (opts.clock) return opts.clock();
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

inline std::string make_session_id(const SessionConfig& config) {
    std::mt19937_64 rng(config.seed ? static_cast<std::uint64_t>(*config.seed) : std::random_device{}());
    std::ostringstream out;
    out << "s-" << std::hex << rng();
    return out.str();
}

/// Mutable view over one engine call: every user-facing message is also
/// appended to the session transcript.
class Turn {
public:
    Turn(Session& session, Backend& backend, const EngineOptions& opts)
        : session_(session), backend_(backend), opts_(opts) {}

    void say(std::string text, EventKind kind = EventKind::Message) {
        session_.transcript.append(kind, {{"text", text}});
        messages_.push_back(std::move(text));
    }

    void move_to(SessionEvent event) {
        const auto from = session_.state;
        session_.state = transition(from, event);
        session_.transcript.append(EventKind::StateChange, {{"from", to_string(from)},
                                                            {"event", to_string(event)},
                                                            {"to", to_string(session_.state)}});
    }

    void warn_pii(std::string_view text, std::string_view source) {
        const auto findings = detect_pii(text);
        if (!findings.empty()) say(pii_warning(findings, source), EventKind::Warning);
    }

    /// One backend call; contributes exactly one disclosure.
    ModelResponse call(const PromptBundle& bundle, int n) {
        ModelParams params{{"temperature", session_.config.temperature}, {"n", n}};
        if (session_.config.seed) params["seed"] = *session_.config.seed;
        ModelResponse resp = backend_.complete(bundle, n, params, opts_.stop);
        throw_if_cancelled(opts_.stop);
        if (resp.candidates.empty()) throw Error(ErrorCode::BackendMalformedReply, "backend returned no candidates");
        if (resp.candidates.size() > static_cast<std::size_t>(n)) resp.candidates.resize(static_cast<std::size_t>(n));

        const Disclosure d = build_disclosure(resp.metadata);
        session_.transcript.append(EventKind::Disclosure, {{"text", d.rendered}, {"disclosure", to_json(d)}});
        messages_.push_back(d.rendered);
        session_.transcript.append(EventKind::ModelOutput, {{"purpose", to_string(bundle.purpose)},
                                                            {"focus", bundle.focus},
                                                            {"turn", bundle.turn},
                                                            {"candidates", resp.candidates}});
        last_disclosure_ = d;
        return resp;
    }

    void ask_review() { say(std::string(kReviewQuestion)); }

    void show_chain() {
        if (session_.chain.empty()) {
            say("The reasoning chain is now empty. Insert a step (for example, \"Insert after Step 0: ...\") "
                "or abandon the session.");
        } else {
            say(render_chain(session_.chain));
        }
    }

    EngineOutcome finish() {
        const bool finished = session_.state == SessionState::Done || session_.state == SessionState::Failed;
        return {session_, std::move(messages_), finished};
    }

    Session& session() { return session_; }
    const EngineOptions& options() const { return opts_; }
    const Disclosure& last_disclosure() const { return last_disclosure_; }

private:
    Session& session_;
    Backend& backend_;
    const EngineOptions& opts_;
    std::vector<std::string> messages_;
    Disclosure last_disclosure_;
};

/// Contiguous runs of stale steps, as ordinal lists.
inline std::vector<std::vector<int>> stale_blocks(const ReasoningChain& chain) {
    std::vector<std::vector<int>> blocks;
    bool open = false;
    for (const auto& s : chain.steps()) {
        if (s.status == StepStatus::Stale) {
            if (!open) blocks.emplace_back();
            blocks.back().push_back(s.ordinal);
            open = true;
        } else {
            open = false;
        }
    }
    return blocks;
}

/// Regenerate every stale block. Returns false when the session failed.
inline bool regenerate(Turn& turn) {
    Session& s = turn.session();
    const auto directives = synthesize_directives(s.preference, s.config.theta);
    for (const auto& block : stale_blocks(s.chain)) {
        const auto bundle = render_prompt(s, PromptPurpose::RegenerateStale, directives, block);
        std::optional<ParsedSteps> accepted;
        std::string problem;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            const auto resp = turn.call(bundle, s.config.candidates);
            const auto ranked = rerank(resp.candidates, s.preference);
            try {
                auto parsed = parse_steps(ranked.front());
                std::vector<int> got;
                for (const auto& [ordinal, text] : parsed.steps) got.push_back(ordinal);
                const bool texts_ok = std::all_of(parsed.steps.begin(), parsed.steps.end(),
                                                  [](const auto& p) { return !p.second.empty(); });
                if (got == block && texts_ok) {
                    turn.warn_pii(ranked.front(), "the model output");
                    accepted = std::move(parsed);
                } else {
                    problem = "the reply rewrote steps other than " + format_step_list(block);
                }
            } catch (const Error& e) {
                problem = e.what();
            }
        }
        if (!accepted) {
            turn.move_to(SessionEvent::FatalError);
            turn.say("Regeneration failed (" + std::string(to_string(ErrorCode::RegeneratedWrongSteps)) + ": " +
                     problem + "). The session has ended; you can still export it.");
            return false;
        }
        for (const auto& [ordinal, text] : accepted->steps) {
            s.chain.set_regenerated_text(s.chain.at_ordinal(ordinal).id, text);
        }
    }
    turn.move_to(SessionEvent::RegenDone);
    return true;
}

inline std::string describe(const EditCommand& c) {
    const std::string scope = c.scope == Scope::Local ? " (local)" : "";
    if (const auto* r = std::get_if<cmd::Replace>(&c.kind)) return "Replace Step " + std::to_string(r->target) + scope;
    if (const auto* d = std::get_if<cmd::Delete>(&c.kind)) return "Delete Step " + std::to_string(d->target) + scope;
    if (const auto* m = std::get_if<cmd::Merge>(&c.kind)) {
        return "Merge Steps " + std::to_string(m->first) + " and " + std::to_string(m->second) + scope;
    }
    if (const auto* i = std::get_if<cmd::Insert>(&c.kind)) {
        return "Insert after Step " + std::to_string(i->after) + scope;
    }
    return "Command";
}

inline std::string acknowledgement(const EditCommand& c) {
    if (const auto* r = std::get_if<cmd::Replace>(&c.kind)) {
        return "Updated Step " + std::to_string(r->target) + " acknowledged.";
    }
    if (const auto* d = std::get_if<cmd::Delete>(&c.kind)) {
        return "Removed Step " + std::to_string(d->target) + " acknowledged.";
    }
    if (const auto* m = std::get_if<cmd::Merge>(&c.kind)) {
        return "Merged Steps " + std::to_string(m->first) + " and " + std::to_string(m->second) + " acknowledged.";
    }
    const auto& i = std::get<cmd::Insert>(c.kind);
    return i.after == 0 ? std::string("New first step acknowledged.")
                        : "New step after Step " + std::to_string(i.after) + " acknowledged.";
}

inline std::string edit_error_message(const Error& e) {
    switch (e.code()) {
        case ErrorCode::UnknownStep:
            return "I could not apply that edit: it refers to a step that does not exist in the current chain.";
        case ErrorCode::MergeNonAdjacent: return "I could not apply that edit: only adjacent steps can be merged.";
        case ErrorCode::EmptyReplacementText: return "I could not apply that edit: the new step text is empty.";
        default: return std::string("I could not apply that edit: ") + e.what();
    }
}

enum class BatchResult { Applied, NotApplied, Failed };

inline BatchResult structural_batch(Turn& turn, const std::vector<EditCommand>& commands, const std::string& utterance,
                             bool pii_checked) {
    Session& s = turn.session();
    if (!pii_checked) {
        for (const auto& c : commands) {
            std::string text;
            if (const auto* r = std::get_if<cmd::Replace>(&c.kind)) text = r->text;
            if (const auto* i = std::get_if<cmd::Insert>(&c.kind)) text = i->text;
            if (!detect_pii(text).empty()) {
                turn.warn_pii(text, "your edit");
                s.pending = PendingAction{PendingAction::Kind::PiiOverride, utterance};
                turn.say("The edit has not been applied. Reply \"apply anyway\" to keep it as written, "
                         "or send a revised edit.");
                return BatchResult::NotApplied;
            }
        }
    }

    // Originals of replaced steps, for the preference log.
    std::vector<std::pair<StepId, std::string>> originals;
    EditResult result;
    try {
        for (const auto& c : commands) {
            if (const auto* r = std::get_if<cmd::Replace>(&c.kind)) {
                const auto& step = s.chain.at_ordinal(r->target);
                originals.emplace_back(step.id, step.text);
            }
        }
        result = apply_edits(s.chain, commands);
    } catch (const Error& e) {
        turn.say(edit_error_message(e));
        return BatchResult::NotApplied;
    }

    s.chain = std::move(result.chain);
    std::string ack;
    nlohmann::json applied = nlohmann::json::array();
    for (const auto& c : commands) {
        ++s.edit_count;
        s.history.push_back({s.edit_count, utterance, describe(c)});
        applied.push_back(describe(c));
        if (!ack.empty()) ack += " ";
        ack += acknowledgement(c);
    }
    for (const auto& [id, original] : originals) {
        const auto idx = s.chain.index_of(id);
        if (!idx) continue;
        const auto& revision = s.chain.steps()[*idx].text;
        if (revision == original) continue;
        s.preference = record_edit(s.edit_log, s.preference,
                                   EditRecord{s.id, id, original, revision, now_ms(turn.options())});
    }
    std::vector<int> stale;
    for (const auto& st : s.chain.steps()) {
        if (result.invalidated.contains(st.id)) stale.push_back(st.ordinal);
    }
    s.transcript.append(EventKind::Edit, {{"commands", applied}, {"invalidated", stale}});
    if (!stale.empty()) ack += " Recalculating " + format_step_list(stale) + "...";
    turn.say(ack);

    if (!stale.empty()) {
        turn.move_to(SessionEvent::EditApplied);
        if (!regenerate(turn)) return BatchResult::Failed;
    }
    return BatchResult::Applied;
}

inline void bias_check(Turn& turn, int ordinal) {
    Session& s = turn.session();
    if (!s.chain.index_of_ordinal(ordinal)) {
        turn.say("There is no Step " + std::to_string(ordinal) + " in the current chain.");
        return;
    }
    const auto bundle = render_prompt(s, PromptPurpose::BiasAudit, {}, {ordinal});
    const auto resp = turn.call(bundle, 1);
    const std::string audit = trim(resp.candidates.front());
    turn.warn_pii(audit, "the model output");
    turn.say("Bias check for Step " + std::to_string(ordinal) + ":\n" + audit);
}

inline FinalAnswer finalize_in(Turn& turn) {
    Session& s = turn.session();
    if (s.state != SessionState::Finalizing) {
        throw Error(ErrorCode::IllegalTransition, "finalize requires state Finalizing");
    }
    if (s.chain.has_stale()) throw Error(ErrorCode::StaleStepsRemain, "stale steps must be regenerated first");
    if (s.chain.empty()) throw Error(ErrorCode::EmptyChain, "there is no reasoning to finalize");
    const auto bundle = render_prompt(s, PromptPurpose::FinalAnswer, {});
    const auto resp = turn.call(bundle, 1);
    FinalAnswer answer{trim(resp.candidates.front()), s.chain, turn.last_disclosure()};
    turn.warn_pii(answer.text, "the model output");
    turn.say("Final answer:\n" + answer.text);
    turn.say(std::string(kExportOffer));
    s.final_answer = answer;
    turn.move_to(SessionEvent::AnswerReady);
    return answer;
}

inline void confirm(Turn& turn) {
    Session& s = turn.session();
    if (s.chain.empty()) {
        turn.say("There is no reasoning to confirm yet. Insert a step first.");
        return;
    }
    if (s.chain.has_stale()) {
        turn.say("Some steps are still waiting to be recalculated; the chain cannot be confirmed yet.");
        return;
    }
    turn.move_to(SessionEvent::Confirm);
    finalize_in(turn);
}

}  // namespace detail

/// Produce the final answer from the confirmed chain. Requires state
/// Finalizing, a non-empty chain and no stale steps; leaves the session Done.
inline FinalAnswer finalize(Session& session, Backend& backend, const EngineOptions& opts = {}) {
    Session work = session;
    detail::Turn turn(work, backend, opts);
    FinalAnswer answer = detail::finalize_in(turn);
    session = std::move(work);
    return answer;
}

/// Draft the initial chain for `query` and present it for review.
inline EngineOutcome start_session(const std::string& query, const SessionConfig& config, Backend& backend,
                                   const EngineOptions& opts = {}) {
    if (trim(query).empty()) throw Error(ErrorCode::Precondition, "query is empty");
    Session s(detail::make_session_id(config), query, config);
    if (opts.initial_preference) s.preference = *opts.initial_preference;
    s.preference.alpha = config.alpha;
    detail::Turn turn(s, backend, opts);
    turn.move_to(SessionEvent::Start);

    const auto bundle = render_prompt(s, PromptPurpose::InitialDraft, {});
    std::optional<std::pair<ReasoningChain, std::string>> draft;
    std::string problem;
    for (int attempt = 0; attempt < 2 && !draft; ++attempt) {
        const auto resp = turn.call(bundle, config.candidates);
        const auto ranked = rerank(resp.candidates, s.preference);
        try {
            draft.emplace(parse_chain(ranked.front()), ranked.front());
        } catch (const Error& e) {
            problem = e.what();
        }
    }
    if (!draft) {
        turn.move_to(SessionEvent::FatalError);
        turn.say("The model did not produce a usable reasoning chain (" + problem + "). The session has ended.");
        return turn.finish();
    }
    s.chain = std::move(draft->first);
    turn.warn_pii(draft->second, "the model output");
    turn.move_to(SessionEvent::DraftReady);
    turn.show_chain();
    turn.ask_review();
    return turn.finish();
}

/// Regenerate the stale steps of a session in state Regenerating.
inline Session regenerate_stale(Session session, Backend& backend, const EngineOptions& opts = {}) {
    if (session.state != SessionState::Regenerating) {
        throw Error(ErrorCode::Precondition, "regeneration requires state Regenerating");
    }
    if (!session.chain.has_stale()) throw Error(ErrorCode::Precondition, "no stale steps to regenerate");
    detail::Turn turn(session, backend, opts);
    detail::regenerate(turn);
    return session;
}

/// Interpret one user utterance against the session.
inline EngineOutcome handle_utterance(Session session, const std::string& utterance, Backend& backend,
                                      const EngineOptions& opts = {}) {
    detail::Turn turn(session, backend, opts);
    session.transcript.append(EventKind::Utterance, {{"text", utterance}});

    static const std::regex override_re(R"(^\s*apply anyway\s*[.!]*\s*$)", std::regex::icase);
    static const std::regex forward_re(R"(^\s*forward\s*[.!]*\s*$)", std::regex::icase);

    std::vector<EditCommand> commands;
    bool pii_checked = false;
    std::optional<PendingAction> pending = std::exchange(session.pending, std::nullopt);
    if (pending && session.state == SessionState::AwaitingReview) {
        if (pending->kind == PendingAction::Kind::PiiOverride && std::regex_match(utterance, override_re)) {
            commands = parse_command(pending->utterance, session.config.default_scope);
            pii_checked = true;
        } else if (pending->kind == PendingAction::Kind::ForwardFreeform && std::regex_match(utterance, forward_re)) {
            if (session.chain.empty()) {
                turn.say("There are no steps to revise; insert a step first.");
                turn.ask_review();
                return turn.finish();
            }
            for (const auto& st : session.chain.steps()) session.chain.mark_stale(st.id);
            ++session.edit_count;
            session.history.push_back({session.edit_count, pending->utterance, "Forwarded request"});
            turn.say("Forwarding your request to the model. Recalculating " +
                     format_step_list(stale_ordinals(session.chain)) + "...");
            turn.move_to(SessionEvent::EditApplied);
            if (detail::regenerate(turn)) {
                turn.show_chain();
                turn.ask_review();
            }
            return turn.finish();
        }
    }
    if (commands.empty()) commands = parse_command(utterance, session.config.default_scope);

    std::vector<EditCommand> structural;
    std::vector<EditCommand> others;
    for (auto& c : commands) (c.is_structural() ? structural : others).push_back(std::move(c));

    if (session.state != SessionState::AwaitingReview) {
        // Only exports are meaningful outside review.
        bool exported = false;
        for (const auto& c : others) {
            if (const auto* e = std::get_if<cmd::Export>(&c.kind)) {
                turn.say(export_session(session, e->format));
                exported = true;
            }
        }
        if (!exported) {
            turn.say(session.state == SessionState::Done
                         ? "The final answer has already been produced. You can still export the session."
                         : "That request is not possible while the session is " +
                               std::string(to_string(session.state)) + ".");
        }
        return turn.finish();
    }

    if (!structural.empty()) {
        const auto result = detail::structural_batch(turn, structural, utterance, pii_checked);
        if (result == detail::BatchResult::Failed) return turn.finish();
        if (result == detail::BatchResult::Applied) turn.show_chain();
    }

    for (const auto& c : others) {
        if (session.state != SessionState::AwaitingReview) break;
        if (std::holds_alternative<cmd::Confirm>(c.kind)) {
            detail::confirm(turn);
        } else if (const auto* b = std::get_if<cmd::BiasCheck>(&c.kind)) {
            detail::bias_check(turn, b->target);
        } else if (const auto* e = std::get_if<cmd::Export>(&c.kind)) {
            turn.say(export_session(session, e->format));
        } else if (const auto* f = std::get_if<cmd::Freeform>(&c.kind)) {
            session.pending = PendingAction{PendingAction::Kind::ForwardFreeform, f->raw};
            turn.say("I did not recognize that as an edit command. Restate it with a step number (for example, "
                     "\"Replace Step 3 with: ...\"), or reply \"forward\" to send your message to the model as a "
                     "request to revise the whole chain.");
        }
    }
    if (session.state == SessionState::AwaitingReview) turn.ask_review();
    return turn.finish();
}

inline std::string export_markdown(const Session& s) {
    std::string out = "# Reasoning session " + s.id + "\n\n## Query\n\n" + s.query() + "\n\n## Reasoning chain\n\n";
    out += s.chain.empty() ? std::string("(no steps)") : render_chain(s.chain);
    out += "\n\n## Edit history\n\n";
    if (s.history.empty()) {
        out += "No edits.\n";
    } else {
        for (const auto& h : s.history) {
            out += std::to_string(h.turn) + ". " + h.summary + ": " + h.utterance + "\n";
        }
    }
    out += "\n## Model disclosures\n";
    std::size_t call = 0;
    for (const auto& e : s.transcript.events()) {
        if (e.kind != EventKind::Disclosure) continue;
        out += "\n### Call " + std::to_string(++call) + "\n\n" + e.payload.at("text").get<std::string>() + "\n";
    }
    if (call == 0) out += "\nNo model calls.\n";
    out += "\n## Final answer\n\n";
    if (s.final_answer) {
        out += s.final_answer->text + "\n";
    } else {
        out += "Not finalized (state: " + std::string(to_string(s.state)) + ").\n";
    }
    return out;
}

/// Deterministic for a fixed session.
inline std::string export_session(const Session& session, ExportFormat format) {
    if (format == ExportFormat::Json) return to_json(session).dump(2);
    return export_markdown(session);
}

}  // namespace cocot
