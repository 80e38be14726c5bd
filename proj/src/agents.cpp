#include "oblivious/agents.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "json.hpp"

#include "oblivious/errors.hpp"

namespace oblivious {

std::string_view to_string(AgentKind kind) { return kind == AgentKind::Baseline ? "baseline" : "oblivious"; }

std::optional<AgentKind> parse_agent_kind(std::string_view text) {
    if (text == "baseline") return AgentKind::Baseline;
    if (text == "oblivious") return AgentKind::Oblivious;
    return std::nullopt;
}

double Decision::chosen_value() const {
    for (const auto& av : considered)
        if (av.action == chosen_action) return av.expected_value;
    return std::numeric_limits<double>::quiet_NaN();
}

std::string AgentMemory::serialize() const {
    nlohmann::ordered_json history = nlohmann::ordered_json::array();
    for (const auto& h : history_) {
        const char* event = h.event == HistoryEntry::Event::Decided    ? "decided"
                            : h.event == HistoryEntry::Event::Excluded ? "excluded"
                                                                       : "arrived";
        nlohmann::ordered_json entry{{"event", event}, {"state", h.state}};
        if (!h.action.empty()) entry["action"] = h.action;
        history.push_back(std::move(entry));
    }
    nlohmann::ordered_json facts = nlohmann::ordered_json::array();
    for (const auto& f : ledger_.facts())
        facts.push_back({{"source", to_string(f.source)}, {"weight", f.weight}, {"payload", f.payload}});
    nlohmann::ordered_json doc{{"history", std::move(history)},
                               {"ledger", {{"lambda", ledger_.lambda()}, {"facts", std::move(facts)}}}};
    return doc.dump();
}

bool rejects_reasoning_action(const Action& action, double penalty_estimate) {
    return action.kind == ActionKind::Reasoning && action.knowledge_gain > 0.0 && penalty_estimate > 0.0;
}

bool consider_reasoning_action(AgentMemory& memory, const Environment& env, StateIndex s, ActionIndex a,
                               double penalty_estimate) {
    const Action& act = env.action(a);
    if (!rejects_reasoning_action(act, penalty_estimate)) return false;
    memory.append({HistoryEntry::Event::Excluded, env.state(s).id, act.id});
    return true;
}

std::vector<ActionIndex> candidate_actions(const Environment& env, StateIndex s, const AgentConfig& cfg) {
    std::vector<ActionIndex> out;
    for (ActionIndex a : env.outgoing(s)) {
        const Action& act = env.action(a);
        if (cfg.kind == AgentKind::Oblivious &&
            (act.kind == ActionKind::Tamper || rejects_reasoning_action(act, cfg.penalty_estimate)))
            continue;
        out.push_back(a);
    }
    return out;
}

namespace {

/// Memoized expectimax over (remaining depth, state).
class Expectimax {
public:
    struct Rules {
        std::function<double(StateIndex)> leaf;
        /// Probability externals correct the agent on entering a state.
        std::function<double(StateIndex)> correction = [](StateIndex) { return 0.0; };
        double correction_cost = 0.0;
        bool deception_branching = false;
        const ExternalActorModel* externals = nullptr;
    };

    Expectimax(const Environment& env, const AgentConfig& cfg, Rules rules)
        : env_(env), cfg_(cfg), rules_(std::move(rules)),
          memo_(static_cast<std::size_t>(cfg.depth) + 1,
                std::vector<double>(env.state_count(), std::numeric_limits<double>::quiet_NaN())) {}

    double value(StateIndex s, int remaining) {
        double& slot = memo_[static_cast<std::size_t>(remaining)][s];
        if (!std::isnan(slot)) return slot;
        const auto candidates = candidate_actions(env_, s, cfg_);
        if (remaining == 0 || env_.state(s).has(StateFlag::Terminal) || candidates.empty()) {
            slot = rules_.leaf(s);
        } else {
            double best = -std::numeric_limits<double>::infinity();
            for (ActionIndex a : candidates) best = std::max(best, action_value(a, remaining - 1));
            slot = best;
        }
        return slot;
    }

    /// Expected value of taking `a`, continuing with `remaining` more actions.
    double action_value(ActionIndex a, int remaining) {
        const Action& act = env_.action(a);
        if (rules_.deception_branching && act.kind == ActionKind::Deceptive) {
            const double p = deception_success_probability(*rules_.externals, env_, a);
            return p * value(act.success_target, remaining) +
                   (1.0 - p) * (value(act.failure_target, remaining) - rules_.correction_cost);
        }
        return act.p_success * entered(act.success_target, remaining) +
               (1.0 - act.p_success) * entered(act.failure_target, remaining);
    }

private:
    double entered(StateIndex t, int remaining) {
        return value(t, remaining) - rules_.correction(t) * rules_.correction_cost;
    }

    const Environment& env_;
    const AgentConfig& cfg_;
    Rules rules_;
    std::vector<std::vector<double>> memo_;
};

Decision decide_at_root(const Environment& env, const AgentConfig& cfg,
                        const std::vector<ActionIndex>& candidates, Expectimax& planner) {
    Decision decision;
    bool have = false;
    for (ActionIndex a : candidates) {
        const double ev = planner.action_value(a, cfg.depth - 1);
        decision.considered.push_back({a, ev});
        const bool better = !have || ev > decision.chosen_value() ||
                            (ev == decision.chosen_value() && env.action(a).id < env.action(decision.chosen_action).id);
        if (better) {
            decision.chosen_action = a;
            have = true;
        }
    }
    return decision;
}

void check_depth(const AgentConfig& cfg) {
    if (cfg.depth < 1) throw InvalidParams("planning depth must be at least 1");
}

}  // namespace

Decision choose_action_baseline(const Environment& env, StateIndex s, const ScoreTable& utility,
                                const AgentConfig& cfg) {
    check_depth(cfg);
    AgentConfig baseline = cfg;
    baseline.kind = AgentKind::Baseline;
    const auto candidates = candidate_actions(env, s, baseline);
    if (candidates.empty()) throw NoActions("state '" + env.state(s).id + "' has no outgoing actions");

    Expectimax planner(env, baseline, {.leaf = [&](StateIndex t) { return utility.at(t); }});
    return decide_at_root(env, baseline, candidates, planner);
}

Decision plan_oblivious(const Environment& env, StateIndex s, const HiddenUtilityHandle& hidden,
                        AgentMemory& memory, const ExternalActorModel& externals,
                        const ScoreTable& intention_model, const AgentConfig& cfg) {
    check_depth(cfg);
    if (cfg.kind != AgentKind::Oblivious) throw InvalidParams("plan_oblivious needs an oblivious agent config");

    Decision decision;
    std::vector<ActionIndex> candidates;
    for (ActionIndex a : env.outgoing(s)) {
        if (env.action(a).kind == ActionKind::Tamper ||
            consider_reasoning_action(memory, env, s, a, cfg.penalty_estimate)) {
            decision.excluded.push_back(a);
            continue;
        }
        candidates.push_back(a);
    }
    if (candidates.empty())
        throw NoActions("state '" + env.state(s).id + "' has no action the oblivious agent may take");

    PlanningEpisode episode;
    const KnowledgeLedger& ledger = memory.ledger();
    Expectimax planner(env, cfg,
                       {.leaf = [&](StateIndex t) { return composite_utility(hidden, episode, ledger, t); },
                        .correction =
                            [&](StateIndex t) { return correction_probability(externals, intention_model.at(t)); },
                        .correction_cost = cfg.penalty_estimate * externals.feedback_weight,
                        .deception_branching = true,
                        .externals = &externals});
    Decision chosen = decide_at_root(env, cfg, candidates, planner);
    decision.chosen_action = chosen.chosen_action;
    decision.considered = std::move(chosen.considered);

    forget_episode(episode, memory,
                   {HistoryEntry::Event::Decided, env.state(s).id, env.action(decision.chosen_action).id});
    decision.episode_wiped = !episode.is_open() && episode.scratchpad_size() == 0;
    return decision;
}

void forget_episode(PlanningEpisode& episode, AgentMemory& memory, HistoryEntry decided) {
    episode.close();
    memory.append(std::move(decided));
}

bool decide_move(double u_k, double pen_k, double p_k, double u_m, double pen_m, double p_m) {
    const double move_k = p_k * (-pen_k + u_k) + (1.0 - p_k) * u_k;
    const double move_m = p_m * (-pen_m + u_m) + (1.0 - p_m) * u_m;
    return move_k > move_m;
}

bool evaluate_deception(double p_deception, double u_k, double u_fail, double pen, double u_m) {
    return p_deception * u_k + (1.0 - p_deception) * (-pen + u_fail) > u_m;
}

double min_penalty_to_block_deception(double p_deception, double u_k, double u_fail, double u_m) {
    if (p_deception >= 1.0) return u_k > u_m ? std::numeric_limits<double>::infinity() : 0.0;
    const double q = 1.0 - p_deception;
    return std::max(0.0, (p_deception * u_k + q * u_fail - u_m) / q);
}

}  // namespace oblivious
