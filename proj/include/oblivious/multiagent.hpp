#pragma once

// Intention exchange between oblivious agents that disagree about a state.
//
// A conflict exists when the proposer believes the target is aligned
// (i'_p >= tau) and the objector does not (i'_o < tau). The more confident
// side wins; the other moves its score for the disputed state to the
// confidence-weighted mean of the two and takes the larger confidence,
// damped. If the objector is strictly more confident it vetoes the action.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oblivious/rng.hpp"
#include "oblivious/state_core.hpp"
#include "oblivious/valuation.hpp"

namespace oblivious {

struct IntentionProfile {
    std::string agent_id;
    ScoreTable i_model;
    double confidence = 1.0;  // in (0, 1]

    bool operator==(const IntentionProfile&) const = default;
};

struct ExchangeConfig {
    double tau = 0.5;
    double damping = 0.9;

    bool operator==(const ExchangeConfig&) const = default;
};

enum class ExchangeCase { ObjectorIntervenes = 1, ObjectorDefers = 2 };

struct ExchangeEvent {
    std::string proposer;
    std::string objector;
    StateIndex state = 0;
    ExchangeCase exchange_case = ExchangeCase::ObjectorDefers;
    double proposer_before = 0.0, objector_before = 0.0;
    double proposer_after = 0.0, objector_after = 0.0;
    double proposer_confidence_after = 0.0, objector_confidence_after = 0.0;

    bool vetoes() const { return exchange_case == ExchangeCase::ObjectorIntervenes; }
};

bool detect_conflict(const IntentionProfile& proposer, const IntentionProfile& objector, StateIndex target,
                     double tau);

struct Resolution {
    IntentionProfile proposer;
    IntentionProfile objector;
    ExchangeEvent event;
};

/// Case 1 (objector strictly more confident): proposer updates, action
/// vetoed. Case 2: objector updates, action proceeds. Only the disputed
/// state's score changes.
Resolution resolve_conflict(const IntentionProfile& proposer, const IntentionProfile& objector,
                            StateIndex target, double damping = 0.9);

/// Mean over unordered pairs of the L1 distance between intention models on
/// `states`. Throws TooFewAgents for fewer than two profiles.
double divergence(std::span<const IntentionProfile> profiles, const StateSet& states);

struct RoundOutcome {
    std::vector<ExchangeEvent> events;
    bool vetoed = false;  // some objector overruled `acting`
};

/// Resolves every conflict about `target`, pairwise in agent-id order,
/// mutating `profiles` in place. When `acting` names the agent whose action
/// is under discussion, a case-1 exchange against it vetoes the action.
RoundOutcome exchange_round(std::vector<IntentionProfile>& profiles, StateIndex target,
                            const ExchangeConfig& cfg, std::optional<std::size_t> acting = std::nullopt);

/// Random ensemble of `agents` profiles over `states` states.
std::vector<IntentionProfile> random_ensemble(Rng& rng, std::size_t agents, std::size_t states);

}  // namespace oblivious
