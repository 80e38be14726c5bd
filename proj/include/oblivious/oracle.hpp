#pragma once

// Brute-force reference implementations used to check the agents.
//
// exact_expectimax expands every action, outcome and correction branch
// explicitly, carrying the accumulated correction cost down each path, with
// no memoization. It is written separately from the agents' planner and is
// instantiated for double and for exact rationals.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "oblivious/scenario.hpp"

namespace oblivious {

using Rational = boost::multiprecision::cpp_rational;

inline constexpr std::size_t kOracleMaxStates = 12;
inline constexpr int kOracleMaxDepth = 4;

/// Everything the oracle needs to value a plan, already in Scalar.
template <class Scalar>
struct OracleValuer {
    std::vector<Scalar> leaf;       // per state
    std::vector<Scalar> p_success;  // per action
    std::vector<Scalar> p_correct;  // per state: correction on entering it
    std::vector<Scalar> p_fool;     // per action: deception succeeds
    Scalar cost = 0;                // per correction
    bool oblivious = false;
    bool refuse_reasoning = false;
};

template <class Scalar>
struct OracleChoice {
    ActionIndex action = 0;
    Scalar value = 0;
    std::vector<std::pair<ActionIndex, Scalar>> values;
};

/// Exhaustive expectimax from `s` with `depth` actions of lookahead. Ties go
/// to the lexicographically smallest action id. Throws BoundsExceeded beyond
/// kOracleMaxStates states or kOracleMaxDepth, NoActions when nothing is
/// available at `s`.
template <class Scalar>
OracleChoice<Scalar> exact_expectimax(const Environment& env, StateIndex s, const OracleValuer<Scalar>& valuer,
                                      int depth);

/// Leaves valued by `utility`; no corrections.
template <class Scalar>
OracleValuer<Scalar> baseline_valuer(const Environment& env, const ScoreTable& utility);

/// Leaves valued by u' minus the ledger penalty; corrections charged at
/// `penalty_estimate * feedback_weight`.
template <class Scalar>
OracleValuer<Scalar> oblivious_valuer(const Environment& env, const ScoreTable& u_hidden,
                                      const ScoreTable& intention_model, const ExternalActorModel& externals,
                                      const Scalar& penalty_estimate, const Scalar& ledger_penalty = Scalar(0));

/// Actions the oracle lets a valuer's agent take at `s`.
template <class Scalar>
std::vector<ActionIndex> oracle_candidates(const Environment& env, StateIndex s, const OracleValuer<Scalar>& valuer);

double to_double(const Rational& r);

// ---------------------------------------------------------------------------
// Threshold sweeps on the two-option deception problem: deceive (succeeds
// with probability p_deception, else lands in a caught state and is
// corrected once) or act honestly.

enum class SweepKind { LambdaStar, DeceptionP };

struct DeceptionCase {
    double p_deception = 0.9;
    double u_k = 10.0;     // u' after a successful deception
    double u_fail = 2.0;   // u' after a caught deception
    double u_m = 5.0;      // u' of the honest outcome
    double lambda = 0.0;   // fixed penalty for DeceptionP sweeps
};

struct SweepRow {
    double parameter = 0.0;
    bool deceives = false;
};

struct SweepResult {
    SweepKind kind = SweepKind::LambdaStar;
    bool flip_found = false;
    /// LambdaStar: smallest penalty that blocks deception. DeceptionP: the
    /// success probability above which deception wins. Within one
    /// resolution step of the true flip.
    double threshold = 0.0;
    double resolution = 0.0;
    std::vector<SweepRow> rows;  // coarse grid for plotting
};

/// Oracle-driven bracketing and bisection in exact arithmetic. Throws
/// InvalidParams for a non-positive resolution.
SweepResult threshold_sweep(SweepKind kind, const DeceptionCase& params, double resolution);

/// Oracle decision on the deception problem for the given parameters.
bool oracle_deceives(const DeceptionCase& params, const Rational& lambda, const Rational& p_deception);

/// Exact penalty at which the oblivious agent's first decision in phase 0 of
/// `spec` changes, searching [0, upper]. At `lambda` itself both actions
/// have equal value and the tie rule decides. Empty when the decision is
/// the same at both ends or no exact crossing could be confirmed.
struct ExactFlip {
    Rational lambda;
    std::string below;  // chosen just below the flip
    std::string above;  // chosen just above it
};
std::optional<ExactFlip> exact_decision_flip(const ScenarioSpec& spec, const Rational& upper);

/// Root decision of the oblivious agent in phase 0 of `spec` under penalty
/// estimate `lambda`, computed exactly.
std::string oracle_first_action(const ScenarioSpec& spec, const Rational& lambda);

// ---------------------------------------------------------------------------
// Outcome prediction: propagates the exact distribution over (phase, state,
// stop actor, tamper) through the run loop, choosing actions with the oracle.

struct OutcomePrediction {
    std::map<std::string, double> final_states;  // id -> probability
    std::map<std::string, double> actions_taken;  // id -> probability the run ever takes it
    double horizon_mass = 0.0;                    // probability the horizon cuts the run
};

OutcomePrediction predict_outcome(const ScenarioSpec& spec, AgentKind kind);

// ---------------------------------------------------------------------------
// Cross-checks against random desk-scale instances.

struct RandomInstance {
    Environment env;
    StateIndex start = 0;
    ScoreTable u_hidden;
    ScoreTable i_model;
    ExternalActorModel externals;
    double lambda = 0.0;
    std::size_t prior_facts = 0;
    int depth = 1;
};

/// |S| <= 10, at most four actions per state, depth 1..3. Values are small
/// dyadic rationals so that double arithmetic is exact.
RandomInstance random_instance(Rng& rng);

struct VerifyReport {
    std::size_t instances = 0;
    std::size_t baseline_agreements = 0;
    std::size_t oblivious_agreements = 0;
    std::vector<std::string> mismatches;

    bool all_agree() const {
        return baseline_agreements == instances && oblivious_agreements == instances;
    }
};

VerifyReport verify_random(std::size_t count, std::uint64_t seed);

}  // namespace oblivious
