#include "oblivious/ensemble.hpp"

#include "oblivious/errors.hpp"

namespace oblivious {

EnsembleTrace run_ensemble(const ScenarioSpec& spec) {
    if (!spec.ensemble) throw InvalidParams("scenario '" + spec.name + "' declares no agent ensemble");
    if (auto issues = validate(spec); !issues.empty()) throw ValidationError(std::move(issues));

    const Phase& ph = spec.phase(0);
    const Environment& env = ph.env;
    const ExternalActorModel& ext = spec.externals;
    AgentConfig cfg = spec.agent_config();
    cfg.kind = AgentKind::Oblivious;

    std::vector<IntentionProfile> profiles = spec.ensemble->agents;
    StateSet all;
    for (StateIndex s = 0; s < env.state_count(); ++s) all.insert(s);

    Rng rng(spec.seed);
    AgentMemory memory{KnowledgeLedger(spec.lambda)};
    const HiddenUtilityHandle hidden(ph.u_hidden);

    EnsembleTrace trace;
    trace.scenario = spec.name;
    trace.seed = spec.seed;
    trace.horizon = spec.horizon;
    trace.initial_divergence = divergence(profiles, all);

    StateIndex s = env.initial();
    for (;;) {
        if (env.state(s).has(StateFlag::Terminal) || candidate_actions(env, s, cfg).empty()) {
            trace.end = EndReason::Terminal;
            break;
        }
        if (static_cast<int>(trace.ticks.size()) >= spec.horizon) {
            trace.end = EndReason::Horizon;
            break;
        }
        const std::size_t actor = trace.ticks.size() % profiles.size();
        const Decision d = plan_oblivious(env, s, hidden, memory, ext, profiles[actor].i_model, cfg);
        const Action& act = env.action(d.chosen_action);

        EnsembleTick rec;
        rec.tick = static_cast<int>(trace.ticks.size());
        rec.actor = profiles[actor].agent_id;
        rec.state = env.state(s).id;
        rec.action = act.id;
        rec.target = env.state(act.success_target).id;

        const RoundOutcome round = exchange_round(profiles, act.success_target, spec.ensemble->exchange, actor);
        rec.exchanges = round.events;
        rec.vetoed = round.vetoed;

        StateIndex next = s;
        if (!round.vetoed) {
            std::optional<FeedbackEvent> fb;
            if (act.kind == ActionKind::Deceptive) {
                const bool fooled = detect_deception(ext, env, d.chosen_action, rng);
                next = fooled ? act.success_target : act.failure_target;
                if (!fooled) fb = caught_deceiving(ext, env, next);
            } else {
                next = apply(env, s, d.chosen_action, rng);
                const ScoreTable& judge = ext.judge == JudgeTable::AgentModel ? profiles[actor].i_model : ph.i_true;
                fb = maybe_correct(ext, env, next, judge, rng);
            }
            if (act.kind == ActionKind::Reasoning && act.knowledge_gain > 0.0)
                memory.learn({FactSource::ReasoningAction, act.knowledge_gain, "reasoned about the hidden utility via " + act.id});
            if (fb) {
                rec.corrected = true;
                memory.learn(std::move(fb->fact));
            }
        }
        rec.next = env.state(next).id;
        rec.divergence = divergence(profiles, all);
        trace.ticks.push_back(std::move(rec));
        s = next;
    }

    trace.final_state = env.state(s).id;
    trace.ledger_size = memory.ledger().size();
    trace.final_profiles = std::move(profiles);
    return trace;
}

}  // namespace oblivious
