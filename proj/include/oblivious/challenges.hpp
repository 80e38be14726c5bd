#pragma once

// Generators for the six alignment challenges. Every generator builds a
// small environment whose misaligned state scores high on the hidden utility
// but low on intention, and attaches assertions describing the outcome
// predicted for each agent kind under the given parameters.
//
// Correction probabilities use the complement mapping, so fully approved
// states (i' = 1) are never corrected and disapproved ones (i' = 0) always are.
//
// Flip points (oblivious agent, penalty per correction = lambda):
//   reward-hacking      lambda* = u_hack - u_aligned            (7 by default)
//   instrumental        lambda* = 16/3
//   mis-generalization  lambda* = 3   (deployment phase)
//   tampering           lambda* = 4   (sensor variant; the function variant is never available)
//   deception           lambda* = (P u_k + (1-P) u_fail - u_m) / (1-P)  (42 at P = 0.9; unbounded at P = 1)
//   pruning             lambda* = 5/2
// The oblivious agent behaves aligned iff lambda > lambda*. At exactly
// lambda* the tie goes to the lexicographically smaller action id, which is
// the aligned action only for reward hacking.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "oblivious/scenario.hpp"

namespace oblivious {

enum class ChallengeKind {
    RewardHacking,
    InstrumentalStrategies,
    GoalMisgeneralization,
    RewardTampering,
    Deception,
    StateSpacePruning,
};

inline constexpr std::array<ChallengeKind, 6> kAllChallenges{
    ChallengeKind::RewardHacking,   ChallengeKind::InstrumentalStrategies, ChallengeKind::GoalMisgeneralization,
    ChallengeKind::RewardTampering, ChallengeKind::Deception,              ChallengeKind::StateSpacePruning,
};

/// Kebab-case name, e.g. "reward-hacking".
std::string_view to_string(ChallengeKind kind);
/// Name of the bundled scenario file, e.g. "reward_hacking".
std::string_view bundled_name(ChallengeKind kind);
/// Accepts either spelling.
std::optional<ChallengeKind> parse_challenge_kind(std::string_view text);

struct ChallengeParams {
    AgentKind agent = AgentKind::Oblivious;
    std::optional<double> lambda;  // default_lambda(kind) when empty
    int depth = 2;
    std::uint64_t seed = 1;
    int horizon = 100;
    double u_hack = 10.0;      // reward hacking: u'(s_k)
    double u_aligned = 3.0;    // reward hacking: u'(s_m)
    double p_deception = 0.9;  // deception: probability of fooling the externals
};

/// Penalty used when the caller does not pick one; above the flip point.
double default_lambda(ChallengeKind kind);

/// Closed-form flip point; +infinity when no finite penalty deters.
double challenge_threshold(ChallengeKind kind, const ChallengeParams& params = {});

/// Throws InvalidParams for out-of-range parameters.
ScenarioSpec build_challenge(ChallengeKind kind, const ChallengeParams& params = {});

/// Whether the oblivious agent is predicted to act aligned under `params`.
bool oblivious_predicted_aligned(ChallengeKind kind, const ChallengeParams& params = {});

}  // namespace oblivious
