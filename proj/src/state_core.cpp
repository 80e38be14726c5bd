#include "oblivious/state_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "oblivious/errors.hpp"

namespace oblivious {

namespace {

constexpr std::array<std::pair<StateFlag, std::string_view>, 3> kFlagNames{{
    {StateFlag::Terminal, "terminal"},
    {StateFlag::StopButton, "stop-button-pressable"},
    {StateFlag::TamperTarget, "tamper-target"},
}};

constexpr std::array<std::pair<ActionKind, std::string_view>, 5> kKindNames{{
    {ActionKind::Normal, "normal"},
    {ActionKind::Reasoning, "reasoning"},
    {ActionKind::Deceptive, "deceptive"},
    {ActionKind::Tamper, "tamper"},
    {ActionKind::StopDisable, "stop-disable"},
}};

}  // namespace

std::string_view to_string(StateFlag flag) {
    for (const auto& [f, name] : kFlagNames)
        if (f == flag) return name;
    return "?";
}

std::string_view to_string(ActionKind kind) {
    for (const auto& [k, name] : kKindNames)
        if (k == kind) return name;
    return "?";
}

std::optional<StateFlag> parse_state_flag(std::string_view text) {
    for (const auto& [f, name] : kFlagNames)
        if (name == text) return f;
    return std::nullopt;
}

std::optional<ActionKind> parse_action_kind(std::string_view text) {
    for (const auto& [k, name] : kKindNames)
        if (name == text) return k;
    return std::nullopt;
}

Environment::Environment(std::vector<State> states, std::vector<Action> actions, StateIndex initial)
    : states_(std::move(states)), actions_(std::move(actions)), initial_(initial) {
    std::vector<std::string> issues;

    if (states_.empty()) issues.emplace_back("environment has no states");
    for (StateIndex s = 0; s < states_.size(); ++s) {
        const auto& st = states_[s];
        if (st.id.empty()) issues.push_back("state #" + std::to_string(s) + " has an empty id");
        if (!state_ids_.emplace(st.id, s).second) issues.push_back("duplicate state id '" + st.id + "'");
        const auto& ref = states_.front().properties;
        bool same_shape = st.properties.size() == ref.size();
        for (std::size_t k = 0; same_shape && k < ref.size(); ++k)
            same_shape = st.properties[k].name == ref[k].name;
        if (!same_shape)
            issues.push_back("state '" + st.id + "' property list differs in shape from state '" +
                             states_.front().id + "'");
    }
    if (initial_ >= states_.size()) issues.emplace_back("initial state does not exist");

    outgoing_.resize(states_.size());
    for (ActionIndex a = 0; a < actions_.size(); ++a) {
        const auto& act = actions_[a];
        const std::string where = "action '" + act.id + "'";
        if (act.id.empty()) issues.push_back("action #" + std::to_string(a) + " has an empty id");
        if (!action_ids_.emplace(act.id, a).second) issues.push_back("duplicate action id '" + act.id + "'");
        if (act.from >= states_.size() || act.success_target >= states_.size() ||
            act.failure_target >= states_.size()) {
            issues.push_back(where + " references a state that does not exist");
            continue;
        }
        if (!(act.p_success >= 0.0 && act.p_success <= 1.0))
            issues.push_back(where + " has p_success outside [0,1]");
        if (!(act.knowledge_gain >= 0.0) || !std::isfinite(act.knowledge_gain))
            issues.push_back(where + " has negative knowledge_gain");
        if (act.kind != ActionKind::Reasoning && act.knowledge_gain != 0.0)
            issues.push_back(where + " carries knowledge_gain but is not a reasoning action");
        outgoing_[act.from].push_back(a);
    }

    if (!issues.empty()) {
        std::string msg = "invalid environment:";
        for (const auto& i : issues) msg += "\n  - " + i;
        throw InvalidEnvironment(msg);
    }
}

std::optional<StateIndex> Environment::find_state(std::string_view id) const {
    auto it = state_ids_.find(std::string(id));
    if (it == state_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<ActionIndex> Environment::find_action(std::string_view id) const {
    auto it = action_ids_.find(std::string(id));
    if (it == action_ids_.end()) return std::nullopt;
    return it->second;
}

Environment Environment::with_initial(StateIndex initial) const {
    return Environment(states_, actions_, initial);
}

EnvironmentBuilder& EnvironmentBuilder::state(std::string id, std::set<StateFlag> flags,
                                              std::vector<Property> properties) {
    states_.push_back(State{std::move(id), std::move(properties), std::move(flags)});
    return *this;
}

EnvironmentBuilder& EnvironmentBuilder::action(std::string id, std::string from, std::string success,
                                               double p_success, std::string failure, ActionKind kind,
                                               double knowledge_gain) {
    actions_.push_back(PendingAction{std::move(id), std::move(from), std::move(success), std::move(failure),
                                     p_success, kind, knowledge_gain});
    return *this;
}

EnvironmentBuilder& EnvironmentBuilder::initial(std::string id) {
    initial_ = std::move(id);
    return *this;
}

Environment EnvironmentBuilder::build() const {
    std::unordered_map<std::string, StateIndex> index;
    for (StateIndex s = 0; s < states_.size(); ++s) index.emplace(states_[s].id, s);
    auto lookup = [&](const std::string& id, const std::string& ctx) {
        auto it = index.find(id);
        if (it == index.end()) throw InvalidEnvironment(ctx + " references unknown state '" + id + "'");
        return it->second;
    };

    std::vector<Action> actions;
    actions.reserve(actions_.size());
    for (const auto& p : actions_) {
        const std::string ctx = "action '" + p.id + "'";
        const StateIndex from = lookup(p.from, ctx);
        actions.push_back(Action{p.id, from, lookup(p.success, ctx),
                                 p.failure.empty() ? from : lookup(p.failure, ctx), p.p_success, p.kind,
                                 p.knowledge_gain});
    }
    const StateIndex init = initial_.empty() ? 0 : lookup(initial_, "initial");
    return Environment(states_, std::move(actions), init);
}

StateIndex apply(const Environment& env, StateIndex s, ActionIndex a, Rng& rng) {
    const Action& act = env.action(a);
    if (act.from != s)
        throw ActionNotApplicable("action '" + act.id + "' does not start at state '" + env.state(s).id + "'");
    return rng.bernoulli(act.p_success) ? act.success_target : act.failure_target;
}

StateSet reachable_set(const Environment& env, StateIndex s) {
    StateSet out;
    for (ActionIndex a : env.outgoing(s)) {
        const Action& act = env.action(a);
        if (act.p_success > 0.0) out.insert(act.success_target);
        if (act.p_success < 1.0) out.insert(act.failure_target);
    }
    return out;
}

std::vector<StateSet> reachable_superset(const Environment& env, StateIndex s, std::size_t depth) {
    std::vector<StateSet> layers;
    layers.reserve(depth + 1);
    layers.push_back({s});
    for (std::size_t d = 1; d <= depth; ++d) {
        StateSet next;
        for (StateIndex from : layers.back()) next.merge(reachable_set(env, from));
        layers.push_back(std::move(next));
    }
    return layers;
}

StateSet states_matching(const Environment& env, StateFlag flag) {
    StateSet out;
    for (StateIndex s = 0; s < env.state_count(); ++s)
        if (env.state(s).has(flag)) out.insert(s);
    return out;
}

}  // namespace oblivious
