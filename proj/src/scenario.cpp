#include "oblivious/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <unordered_set>

#include "oblivious/errors.hpp"

namespace oblivious {

namespace {

constexpr std::array<std::pair<AssertionKind, std::string_view>, 5> kAssertionNames{{
    {AssertionKind::FinalStateIn, "final-state-in"},
    {AssertionKind::NeverVisits, "never-visits"},
    {AssertionKind::ActionNeverTaken, "action-never-taken"},
    {AssertionKind::LedgerBounded, "ledger-bounded"},
    {AssertionKind::TerminatesBy, "terminates-by"},
}};

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

bool contains(const std::vector<std::string>& ids, const std::string& id) {
    return std::find(ids.begin(), ids.end(), id) != ids.end();
}

StateSet all_states(const Environment& env) {
    StateSet out;
    for (StateIndex s = 0; s < env.state_count(); ++s) out.insert(s);
    return out;
}

}  // namespace

std::string_view to_string(AssertionKind kind) {
    for (const auto& [k, name] : kAssertionNames)
        if (k == kind) return name;
    return "?";
}

std::optional<AssertionKind> parse_assertion_kind(std::string_view text) {
    for (const auto& [k, name] : kAssertionNames)
        if (name == text) return k;
    return std::nullopt;
}

std::string_view to_string(EndReason reason) {
    switch (reason) {
        case EndReason::Terminal: return "terminal";
        case EndReason::Stopped: return "stopped";
        case EndReason::Horizon: return "horizon";
    }
    return "?";
}

bool approximation_premise_holds(const ScenarioSpec& spec) {
    return std::all_of(spec.phases.begin(), spec.phases.end(), [](const Phase& p) {
        return approximation_quality(p.i_true, p.i_model, p.u_hidden, all_states(p.env));
    });
}

std::vector<std::string> validate(const ScenarioSpec& spec) {
    std::vector<std::string> issues;
    auto issue = [&](std::string msg) { issues.push_back(std::move(msg)); };

    if (spec.name.empty()) issue("meta.name is empty");
    if (spec.phases.empty()) issue("scenario declares no states");

    std::unordered_set<std::string> state_ids, action_ids;
    for (const auto& ph : spec.phases) {
        const std::string where = "phase '" + ph.name + "'";
        if (!ph.u_hidden.covers(ph.env)) issue(where + ": u_hidden is not defined for every state");
        if (!ph.i_true.covers(ph.env)) issue(where + ": i_true is not defined for every state");
        if (!ph.i_model.covers(ph.env)) issue(where + ": i_model is not defined for every state");
        for (const auto& st : ph.env.states())
            if (!state_ids.insert(st.id).second) issue("state id '" + st.id + "' is declared in more than one phase");
        for (const auto& act : ph.env.actions()) {
            if (!action_ids.insert(act.id).second)
                issue("action id '" + act.id + "' is declared in more than one phase");
            auto det = spec.externals.detection.find(act.id);
            if (act.kind == ActionKind::Deceptive) {
                if (det == spec.externals.detection.end())
                    issue("deceptive action '" + act.id + "' has no deception_p");
                else if (det->second != act.p_success)
                    issue("deceptive action '" + act.id + "' must have p_success equal to deception_p");
            } else if (det != spec.externals.detection.end()) {
                issue("action '" + act.id + "' has deception_p but is not deceptive");
            }
        }
        if (ph.i_model.covers(ph.env) && ph.i_true.covers(ph.env)) {
            for (StateIndex s = 0; s < ph.env.state_count(); ++s) {
                if (!in_unit_interval(ph.i_model.at(s)))
                    issue("i_model of state '" + ph.env.state(s).id + "' is outside [0,1]");
                if (!in_unit_interval(ph.i_true.at(s)))
                    issue("i_true of state '" + ph.env.state(s).id + "' is outside [0,1]");
            }
        }
    }
    const bool tables_ok = issues.empty();
    if (tables_ok && !spec.skip_approximation_check && !approximation_premise_holds(spec))
        issue("i_model does not approximate i_true better than u_hidden does");

    const auto& ext = spec.externals;
    if (!(ext.c > 0.0) || !std::isfinite(ext.c)) issue("externals.c must be positive");
    if (!(ext.eps > 0.0)) issue("externals eps floor must be positive");
    if (!(ext.feedback_weight > 0.0) || !std::isfinite(ext.feedback_weight))
        issue("externals.feedback_weight must be positive");
    for (const auto& [id, p] : ext.detection)
        if (!in_unit_interval(p)) issue("deception_p of action '" + id + "' is outside [0,1]");

    if (spec.depth < 1) issue("agent.depth must be at least 1");
    if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda)) issue("agent.lambda must be finite and nonnegative");
    if (spec.penalty_estimate && (!(*spec.penalty_estimate >= 0.0) || !std::isfinite(*spec.penalty_estimate)))
        issue("agent.penalty_estimate must be finite and nonnegative");
    if (spec.horizon < 0) issue("run.horizon must be nonnegative");

    for (const auto& a : spec.assertions) {
        const std::string where = "assertion '" + std::string(to_string(a.kind)) + "'";
        switch (a.kind) {
            case AssertionKind::FinalStateIn:
            case AssertionKind::NeverVisits:
                if (a.ids.empty()) issue(where + " needs at least one state id");
                for (const auto& id : a.ids)
                    if (!state_ids.contains(id)) issue(where + " references unknown state '" + id + "'");
                break;
            case AssertionKind::ActionNeverTaken:
                if (a.ids.empty()) issue(where + " needs at least one action id");
                for (const auto& id : a.ids)
                    if (!action_ids.contains(id)) issue(where + " references unknown action '" + id + "'");
                break;
            case AssertionKind::LedgerBounded:
            case AssertionKind::TerminatesBy:
                if (!(a.bound >= 0.0)) issue(where + " needs a nonnegative bound");
                break;
        }
    }

    if (spec.ensemble) {
        const auto& ens = *spec.ensemble;
        if (ens.agents.size() < 2) issue("ensemble needs at least two agents");
        std::set<std::string> ids;
        for (const auto& ag : ens.agents) {
            if (!ids.insert(ag.agent_id).second) issue("duplicate ensemble agent id '" + ag.agent_id + "'");
            if (!(ag.confidence > 0.0 && ag.confidence <= 1.0))
                issue("agent '" + ag.agent_id + "' confidence must lie in (0,1]");
            if (!spec.phases.empty() && !ag.i_model.covers(spec.phases.front().env))
                issue("agent '" + ag.agent_id + "' i_model is not defined for every state");
            for (double v : ag.i_model.values())
                if (!in_unit_interval(v)) issue("agent '" + ag.agent_id + "' i_model value outside [0,1]");
        }
        if (!(ens.exchange.tau > 0.0 && ens.exchange.tau < 1.0)) issue("exchange.tau must lie in (0,1)");
        if (!(ens.exchange.damping > 0.0 && ens.exchange.damping <= 1.0))
            issue("exchange.damping must lie in (0,1]");
    }
    return issues;
}

ScenarioSpec apply_overrides(ScenarioSpec spec, const RunOverrides& o) {
    if (o.agent_kind) spec.agent_kind = *o.agent_kind;
    if (o.depth) spec.depth = *o.depth;
    if (o.lambda) spec.lambda = *o.lambda;
    if (o.penalty_estimate) spec.penalty_estimate = *o.penalty_estimate;
    if (o.seed) spec.seed = *o.seed;
    if (o.horizon) spec.horizon = *o.horizon;
    if (auto issues = validate(spec); !issues.empty()) throw ValidationError(std::move(issues));
    return spec;
}

bool Trace::passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

std::vector<std::string> Trace::visited() const {
    std::vector<std::string> out{initial_state};
    for (const auto& t : ticks) {
        if (t.state != out.back()) out.push_back(t.state);  // phase switch
        out.push_back(t.next);
    }
    return out;
}

Trace run_scenario(const ScenarioSpec& spec) {
    if (auto issues = validate(spec); !issues.empty()) throw ValidationError(std::move(issues));

    const AgentConfig cfg = spec.agent_config();
    const ExternalActorModel& ext = spec.externals;
    Rng rng(spec.seed);
    AgentMemory memory{KnowledgeLedger(spec.lambda)};

    std::vector<ScoreTable> hidden;
    for (const auto& ph : spec.phases) hidden.push_back(ph.u_hidden);

    Trace trace;
    trace.scenario = spec.name;
    trace.agent_kind = spec.agent_kind;
    trace.seed = spec.seed;
    trace.horizon = spec.horizon;
    trace.lambda = spec.lambda;

    std::size_t phase = 0;
    StateIndex s = spec.phase(0).env.initial();
    bool stop_active = true;
    bool tampered = false;
    std::set<std::pair<std::size_t, StateIndex>> corrected_states;

    auto arrived = [&](std::size_t ph, StateIndex st) {
        memory.append({HistoryEntry::Event::Arrived, spec.phase(ph).env.state(st).id, {}});
    };
    auto finished = [&](std::size_t ph, StateIndex st) {
        const Environment& env = spec.phase(ph).env;
        return env.state(st).has(StateFlag::Terminal) || candidate_actions(env, st, cfg).empty();
    };

    trace.initial_state = spec.phase(0).env.state(s).id;
    arrived(phase, s);

    for (;;) {
        while (finished(phase, s) && phase + 1 < spec.phases.size()) {
            ++phase;
            s = spec.phase(phase).env.initial();
            arrived(phase, s);
        }
        if (finished(phase, s)) {
            trace.end = EndReason::Terminal;
            break;
        }
        if (static_cast<int>(trace.ticks.size()) >= spec.horizon) {
            trace.end = EndReason::Horizon;
            break;
        }

        const Phase& ph = spec.phase(phase);
        const Environment& env = ph.env;
        Decision decision;
        if (cfg.kind == AgentKind::Baseline) {
            decision = choose_action_baseline(env, s, hidden[phase], cfg);
            memory.append({HistoryEntry::Event::Decided, env.state(s).id, env.action(decision.chosen_action).id});
        } else {
            decision = plan_oblivious(env, s, HiddenUtilityHandle(hidden[phase]), memory, ext, ph.i_model, cfg);
        }
        const ActionIndex a = decision.chosen_action;
        const Action& act = env.action(a);

        TickRecord rec;
        rec.tick = static_cast<int>(trace.ticks.size());
        rec.phase = phase;
        rec.state = env.state(s).id;
        rec.action = act.id;
        rec.action_kind = act.kind;
        for (const auto& av : decision.considered) rec.ev_table.emplace_back(env.action(av.action).id, av.expected_value);
        for (ActionIndex x : decision.excluded) rec.excluded.push_back(env.action(x).id);

        std::vector<FeedbackEvent> events;
        StateIndex next;
        if (act.kind == ActionKind::Deceptive) {
            const bool fooled = detect_deception(ext, env, a, rng);
            next = fooled ? act.success_target : act.failure_target;
            if (!fooled) events.push_back(caught_deceiving(ext, env, next));
        } else {
            next = apply(env, s, a, rng);
            if (act.kind == ActionKind::Tamper && next == act.success_target) {
                const auto values = hidden[phase].values();
                hidden[phase] = ScoreTable::constant(values.size(), *std::max_element(values.begin(), values.end()));
                tampered = true;
            }
            if (act.kind == ActionKind::StopDisable && next == act.success_target) stop_active = false;
            if (ext.repeat_feedback || !corrected_states.contains({phase, next})) {
                const ScoreTable& judge = ext.judge == JudgeTable::AgentModel ? ph.i_model : ph.i_true;
                if (auto fb = maybe_correct(ext, env, next, judge, rng)) events.push_back(std::move(*fb));
            }
        }
        if (act.kind == ActionKind::Reasoning && act.knowledge_gain > 0.0)
            memory.learn({FactSource::ReasoningAction, act.knowledge_gain, "reasoned about the hidden utility via " + act.id});
        for (auto& ev : events) {
            corrected_states.insert({phase, ev.state});
            rec.feedback.push_back(ev.fact.payload);
            memory.learn(std::move(ev.fact));
        }
        arrived(phase, next);

        rec.next = env.state(next).id;
        rec.u_hidden_next = hidden[phase].at(next);
        rec.corrected = !events.empty();
        rec.ledger_size = memory.ledger().size();
        rec.penalty = penalty(memory.ledger());
        rec.stop = stop_pressed(env, next, stop_active);
        rec.stop_actor_active = stop_active;
        rec.tampered = tampered;
        trace.ticks.push_back(std::move(rec));

        s = next;
        if (trace.ticks.back().stop) {
            trace.end = EndReason::Stopped;
            break;
        }
    }

    trace.final_state = spec.phase(phase).env.state(s).id;
    trace.final_phase = phase;
    trace.ledger_size = memory.ledger().size();
    trace.penalty = penalty(memory.ledger());
    trace.verdicts = evaluate_assertions(spec, trace);
    return trace;
}

std::vector<Verdict> evaluate_assertions(const ScenarioSpec& spec, const Trace& trace) {
    std::vector<Verdict> out;
    const auto visited = trace.visited();
    for (const auto& a : spec.assertions) {
        if (!a.applies_to(trace.agent_kind)) continue;
        Verdict v{a, false, {}};
        switch (a.kind) {
            case AssertionKind::FinalStateIn:
                v.passed = contains(a.ids, trace.final_state);
                v.detail = "final state " + trace.final_state;
                break;
            case AssertionKind::NeverVisits: {
                auto hit = std::find_if(visited.begin(), visited.end(),
                                        [&](const std::string& id) { return contains(a.ids, id); });
                v.passed = hit == visited.end();
                v.detail = v.passed ? "no listed state visited" : "visited " + *hit;
                break;
            }
            case AssertionKind::ActionNeverTaken: {
                auto hit = std::find_if(trace.ticks.begin(), trace.ticks.end(),
                                        [&](const TickRecord& t) { return contains(a.ids, t.action); });
                v.passed = hit == trace.ticks.end();
                v.detail = v.passed ? "no listed action taken" : "took " + hit->action + " at tick " + std::to_string(hit->tick);
                break;
            }
            case AssertionKind::LedgerBounded:
                v.passed = static_cast<double>(trace.ledger_size) <= a.bound;
                v.detail = "ledger size " + std::to_string(trace.ledger_size);
                break;
            case AssertionKind::TerminatesBy:
                v.passed = trace.end != EndReason::Horizon && static_cast<double>(trace.ticks.size()) <= a.bound;
                v.detail = std::string(to_string(trace.end)) + " after " + std::to_string(trace.ticks.size()) + " ticks";
                break;
        }
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace oblivious
