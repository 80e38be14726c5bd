#pragma once

// Several oblivious agents sharing one body. They take turns choosing the
// next action, each with its own intention model; before an action runs,
// the ensemble resolves disagreements about its target state and may veto it.

#include <cstdint>
#include <string>
#include <vector>

#include "oblivious/multiagent.hpp"
#include "oblivious/scenario.hpp"

namespace oblivious {

struct EnsembleTick {
    int tick = 0;
    std::string actor;
    std::string state;
    std::string action;
    std::string target;  // success target of `action`, the disputed state
    std::vector<ExchangeEvent> exchanges;
    bool vetoed = false;
    std::string next;    // equals `state` when vetoed
    bool corrected = false;
    double divergence = 0.0;  // after this tick's exchanges
};

struct EnsembleTrace {
    std::string scenario;
    std::uint64_t seed = 0;
    int horizon = 0;
    double initial_divergence = 0.0;
    std::vector<EnsembleTick> ticks;
    std::string final_state;
    EndReason end = EndReason::Horizon;
    std::size_t ledger_size = 0;
    std::vector<IntentionProfile> final_profiles;
};

/// Runs the first phase of `spec` with its ensemble. Agents act in
/// round-robin order and share one knowledge ledger. Throws InvalidParams
/// when the scenario has no ensemble.
EnsembleTrace run_ensemble(const ScenarioSpec& spec);

}  // namespace oblivious
