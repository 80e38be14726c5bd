#pragma once

// Declarative scenario bundle, behavioral assertions, traces and the
// single-run executor.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oblivious/agents.hpp"
#include "oblivious/externals.hpp"
#include "oblivious/multiagent.hpp"
#include "oblivious/state_core.hpp"
#include "oblivious/valuation.hpp"

namespace oblivious {

/// One environment with its score tables. A scenario has one phase, or two
/// for a training -> deployment shift; agent config and ledger carry over.
struct Phase {
    std::string name;
    Environment env;
    ScoreTable u_hidden;  // u', the designer's proxy goal
    ScoreTable i_true;    // i, ground-truth intention
    ScoreTable i_model;   // i', the agent's model of i

    bool operator==(const Phase&) const = default;
};

enum class AssertionKind { FinalStateIn, NeverVisits, ActionNeverTaken, LedgerBounded, TerminatesBy };

std::string_view to_string(AssertionKind kind);
std::optional<AssertionKind> parse_assertion_kind(std::string_view text);

struct BehavioralAssertion {
    AssertionKind kind = AssertionKind::FinalStateIn;
    std::vector<std::string> ids;  // state or action ids, for set-valued kinds
    double bound = 0.0;            // for ledger-bounded and terminates-by
    std::optional<AgentKind> agent;  // applies to every agent kind when empty

    bool applies_to(AgentKind kind) const { return !agent || *agent == kind; }
    bool operator==(const BehavioralAssertion&) const = default;
};

struct EnsembleSpec {
    std::vector<IntentionProfile> agents;
    ExchangeConfig exchange;

    bool operator==(const EnsembleSpec&) const = default;
};

struct ScenarioSpec {
    std::string name;
    std::string description;
    std::string challenge;  // empty for hand-written scenarios
    bool skip_approximation_check = false;

    std::vector<Phase> phases;
    ExternalActorModel externals;

    AgentKind agent_kind = AgentKind::Oblivious;
    int depth = 2;
    double lambda = 0.0;
    std::optional<double> penalty_estimate;  // defaults to lambda

    int horizon = 100;
    std::uint64_t seed = 1;
    std::vector<BehavioralAssertion> assertions;
    std::optional<EnsembleSpec> ensemble;

    AgentConfig agent_config() const { return {agent_kind, depth, penalty_estimate.value_or(lambda)}; }
    const Phase& phase(std::size_t i) const { return phases.at(i); }
    bool operator==(const ScenarioSpec&) const = default;
};

/// Every violated invariant, empty when the scenario is valid.
std::vector<std::string> validate(const ScenarioSpec& spec);

/// Approximation premise (i' closer to i than u' is) for every phase.
bool approximation_premise_holds(const ScenarioSpec& spec);

struct RunOverrides {
    std::optional<AgentKind> agent_kind;
    std::optional<int> depth;
    std::optional<double> lambda;
    std::optional<double> penalty_estimate;
    std::optional<std::uint64_t> seed;
    std::optional<int> horizon;
};

/// Applies overrides and re-validates. A lambda override without a
/// penalty_estimate override keeps the estimate tied to lambda unless the
/// scenario set it explicitly.
ScenarioSpec apply_overrides(ScenarioSpec spec, const RunOverrides& overrides);

enum class EndReason { Terminal, Stopped, Horizon };
std::string_view to_string(EndReason reason);

struct TickRecord {
    int tick = 0;
    std::size_t phase = 0;
    std::string state;
    std::string action;
    ActionKind action_kind = ActionKind::Normal;
    std::vector<std::pair<std::string, double>> ev_table;
    std::vector<std::string> excluded;
    std::string next;
    /// God's-eye value of u' at `next`; the agent itself never keeps it.
    double u_hidden_next = 0.0;
    bool corrected = false;
    std::vector<std::string> feedback;  // payloads of facts injected this tick
    std::size_t ledger_size = 0;
    double penalty = 0.0;
    bool stop = false;
    bool stop_actor_active = true;
    bool tampered = false;
};

struct Verdict {
    BehavioralAssertion assertion;
    bool passed = false;
    std::string detail;
};

struct Trace {
    std::string scenario;
    AgentKind agent_kind = AgentKind::Oblivious;
    std::uint64_t seed = 0;
    int horizon = 0;
    double lambda = 0.0;
    std::string initial_state;
    std::vector<TickRecord> ticks;
    std::string final_state;
    std::size_t final_phase = 0;
    EndReason end = EndReason::Horizon;
    std::size_t ledger_size = 0;
    double penalty = 0.0;
    std::vector<Verdict> verdicts;

    bool passed() const;
    /// Every state entered, including the initial one, in order.
    std::vector<std::string> visited() const;
};

/// Executes plan -> act -> correct -> record -> stop-check until a terminal
/// state, a stop, or the horizon. Deterministic in (spec, spec.seed).
Trace run_scenario(const ScenarioSpec& spec);

std::vector<Verdict> evaluate_assertions(const ScenarioSpec& spec, const Trace& trace);

}  // namespace oblivious
