#pragma once

// Discrete environment kernel: states, probabilistic actions and reachability.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "oblivious/rng.hpp"

namespace oblivious {

using StateIndex = std::size_t;
using ActionIndex = std::size_t;
using StateSet = std::set<StateIndex>;

enum class StateFlag : std::uint8_t { Terminal, StopButton, TamperTarget };

enum class ActionKind : std::uint8_t { Normal, Reasoning, Deceptive, Tamper, StopDisable };

std::string_view to_string(StateFlag flag);
std::string_view to_string(ActionKind kind);
std::optional<StateFlag> parse_state_flag(std::string_view text);
std::optional<ActionKind> parse_action_kind(std::string_view text);

struct Property {
    std::string name;
    std::int64_t value = 0;

    bool operator==(const Property&) const = default;
};

struct State {
    std::string id;
    std::vector<Property> properties;
    std::set<StateFlag> flags;

    bool has(StateFlag flag) const { return flags.contains(flag); }
    bool operator==(const State&) const = default;
};

struct Action {
    std::string id;
    StateIndex from = 0;
    StateIndex success_target = 0;
    StateIndex failure_target = 0;
    double p_success = 1.0;
    ActionKind kind = ActionKind::Normal;
    double knowledge_gain = 0.0;  // fact-units; nonzero only for reasoning actions

    bool operator==(const Action&) const = default;
};

/// Finite, immutable environment. Construction validates every invariant and
/// throws InvalidEnvironment listing all violations.
class Environment {
public:
    Environment(std::vector<State> states, std::vector<Action> actions, StateIndex initial);

    std::size_t state_count() const { return states_.size(); }
    std::size_t action_count() const { return actions_.size(); }

    const State& state(StateIndex s) const { return states_.at(s); }
    const Action& action(ActionIndex a) const { return actions_.at(a); }
    std::span<const State> states() const { return states_; }
    std::span<const Action> actions() const { return actions_; }
    StateIndex initial() const { return initial_; }

    /// Outgoing actions of `s`, in declaration order.
    std::span<const ActionIndex> outgoing(StateIndex s) const { return outgoing_.at(s); }

    std::optional<StateIndex> find_state(std::string_view id) const;
    std::optional<ActionIndex> find_action(std::string_view id) const;

    /// Same states and actions, different starting state.
    Environment with_initial(StateIndex initial) const;

    bool operator==(const Environment& other) const {
        return states_ == other.states_ && actions_ == other.actions_ && initial_ == other.initial_;
    }

private:
    std::vector<State> states_;
    std::vector<Action> actions_;
    StateIndex initial_;
    std::vector<std::vector<ActionIndex>> outgoing_;
    std::unordered_map<std::string, StateIndex> state_ids_;
    std::unordered_map<std::string, ActionIndex> action_ids_;
};

/// Builds an Environment from string ids.
class EnvironmentBuilder {
public:
    EnvironmentBuilder& state(std::string id, std::set<StateFlag> flags = {},
                              std::vector<Property> properties = {});

    /// Adds an action. An empty `failure` means the attempt fizzles and the
    /// agent stays in `from`.
    EnvironmentBuilder& action(std::string id, std::string from, std::string success,
                               double p_success = 1.0, std::string failure = {},
                               ActionKind kind = ActionKind::Normal, double knowledge_gain = 0.0);

    EnvironmentBuilder& initial(std::string id);

    Environment build() const;

private:
    struct PendingAction {
        std::string id, from, success, failure;
        double p_success;
        ActionKind kind;
        double knowledge_gain;
    };
    std::vector<State> states_;
    std::vector<PendingAction> actions_;
    std::string initial_;
};

/// Attempts `a` from `s`: success_target with probability p_success, else
/// failure_target. Draws exactly one variate from `rng`.
StateIndex apply(const Environment& env, StateIndex s, ActionIndex a, Rng& rng);

/// States reachable from `s` by one atomic action: every outcome of an
/// outgoing action that has nonzero probability.
StateSet reachable_set(const Environment& env, StateIndex s);

/// Element d holds the states reachable in exactly d actions; element 0 is {s}.
std::vector<StateSet> reachable_superset(const Environment& env, StateIndex s, std::size_t depth);

StateSet states_matching(const Environment& env, StateFlag flag);

}  // namespace oblivious
