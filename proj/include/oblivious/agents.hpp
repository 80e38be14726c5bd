#pragma once

// Baseline expected-utility agent and the oblivious agent.
//
// Both plan by exact bounded-depth expectimax. A state is a leaf when the
// horizon is exhausted, it is flagged terminal, or it has no candidate
// actions. The baseline values leaves by its utility table directly. The
// oblivious agent values leaves by the composite utility -k(K) + u'(s),
// querying u' through a PlanningEpisode, and additionally charges the
// expected cost of external correction at every state it plans to enter:
//
//   W(t, d) = V(t, d) - P_correct(t) * penalty_estimate * feedback_weight
//
// Deceptive actions branch on deception success instead: a successful
// deception is never corrected, a failed one always is.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oblivious/externals.hpp"
#include "oblivious/state_core.hpp"
#include "oblivious/valuation.hpp"

namespace oblivious {

enum class AgentKind { Baseline, Oblivious };

std::string_view to_string(AgentKind kind);
std::optional<AgentKind> parse_agent_kind(std::string_view text);

struct AgentConfig {
    AgentKind kind = AgentKind::Oblivious;
    int depth = 1;  // planning horizon, >= 1
    /// The oblivious agent's belief about lambda. The architecture is
    /// public, so this normally equals the ledger's lambda.
    double penalty_estimate = 0.0;

    bool operator==(const AgentConfig&) const = default;
};

struct ActionValue {
    ActionIndex action = 0;
    double expected_value = 0.0;
};

/// Ties on expected value go to the lexicographically smallest action id.
struct Decision {
    ActionIndex chosen_action = 0;
    std::vector<ActionValue> considered;
    std::vector<ActionIndex> excluded;
    bool episode_wiped = false;

    double chosen_value() const;
};

struct HistoryEntry {
    enum class Event { Decided, Excluded, Arrived };
    Event event = Event::Decided;
    std::string state;
    std::string action;  // empty for Arrived

    bool operator==(const HistoryEntry&) const = default;
};

/// The agent's persistent memory: an append-only history of ids and the
/// knowledge ledger. It has no field able to hold a score.
class AgentMemory {
public:
    explicit AgentMemory(KnowledgeLedger ledger) : ledger_(std::move(ledger)) {}

    const std::vector<HistoryEntry>& history() const { return history_; }
    const KnowledgeLedger& ledger() const { return ledger_; }

    void append(HistoryEntry entry) { history_.push_back(std::move(entry)); }
    void learn(KnowledgeFact fact) { ledger_ = record_feedback(ledger_, std::move(fact)); }

    /// JSON rendering of everything the agent remembers.
    std::string serialize() const;

private:
    std::vector<HistoryEntry> history_;
    KnowledgeLedger ledger_;
};

/// True when a reasoning action must be refused: it would add knowledge of u'
/// and knowledge is penalized.
bool rejects_reasoning_action(const Action& action, double penalty_estimate);

/// Applies the rejection rule for the action `a` available at `s`; a refused
/// action is recorded in the history. Returns true when `a` is excluded.
bool consider_reasoning_action(AgentMemory& memory, const Environment& env, StateIndex s, ActionIndex a,
                               double penalty_estimate);

/// Actions at `s` the given agent kind may take: everything for the
/// baseline; the oblivious agent loses tamper actions and refused reasoning
/// actions.
std::vector<ActionIndex> candidate_actions(const Environment& env, StateIndex s, const AgentConfig& cfg);

/// Unpenalized expectimax planner. Throws NoActions when `s` has no outgoing action.
Decision choose_action_baseline(const Environment& env, StateIndex s, const ScoreTable& utility,
                                const AgentConfig& cfg);

/// Oblivious planner. Opens a PlanningEpisode, evaluates every candidate,
/// then wipes the episode and records only ids in `memory`.
Decision plan_oblivious(const Environment& env, StateIndex s, const HiddenUtilityHandle& hidden,
                        AgentMemory& memory, const ExternalActorModel& externals,
                        const ScoreTable& intention_model, const AgentConfig& cfg);

/// Closes the episode and records the decision in memory.
void forget_episode(PlanningEpisode& episode, AgentMemory& memory, HistoryEntry decided);

/// Move to s_k rather than s_m iff
///   P_k(-pen_k + u_k) + (1-P_k) u_k > P_m(-pen_m + u_m) + (1-P_m) u_m.
bool decide_move(double u_k, double pen_k, double p_k, double u_m, double pen_m, double p_m);

/// Deceive iff P u_k + (1-P)(-pen + u_fail) > u_m.
bool evaluate_deception(double p_deception, double u_k, double u_fail, double pen, double u_m);

/// Smallest penalty >= 0 for which evaluate_deception is false. Infinity when
/// no finite penalty works (certain deception with u_k > u_m).
double min_penalty_to_block_deception(double p_deception, double u_k, double u_fail, double u_m);

}  // namespace oblivious
