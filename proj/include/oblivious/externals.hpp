#pragma once

// External actors: correction probability as a function of perceived
// alignment, feedback injection, deception detection and the stop button.

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "oblivious/rng.hpp"
#include "oblivious/state_core.hpp"
#include "oblivious/valuation.hpp"

namespace oblivious {

/// Functional forms for "correction probability decreases as perceived
/// alignment increases".
///   InverseProportional: min(1, c / max(i, eps))
///   Complement:          1 - clamp(i, 0, 1)
enum class CorrectionMapping { InverseProportional, Complement };

/// Which table externals use to judge a state.
enum class JudgeTable { AgentModel, GroundTruth };

std::string_view to_string(CorrectionMapping mapping);
std::optional<CorrectionMapping> parse_correction_mapping(std::string_view text);
std::string_view to_string(JudgeTable judge);
std::optional<JudgeTable> parse_judge_table(std::string_view text);

struct ExternalActorModel {
    CorrectionMapping mapping = CorrectionMapping::InverseProportional;
    double c = 0.1;
    double eps = 1e-9;
    /// Probability that a deceptive action fools every external, keyed by
    /// action id. Missing entries fall back to the action's p_success.
    std::map<std::string, double> detection;
    double feedback_weight = 1.0;
    bool repeat_feedback = true;  // false: at most one correction per state
    JudgeTable judge = JudgeTable::AgentModel;

    bool operator==(const ExternalActorModel&) const = default;
};

struct FeedbackEvent {
    StateIndex state = 0;
    KnowledgeFact fact;
};

double correction_probability(const ExternalActorModel& model, double intention_score);

/// Emits a correction with probability correction_probability(i_table(s)).
/// Draws exactly one variate. The caller appends the fact to the ledger.
std::optional<FeedbackEvent> maybe_correct(const ExternalActorModel& model, const Environment& env,
                                           StateIndex s, const ScoreTable& intention_table, Rng& rng);

/// The feedback injected when a deception attempt is caught at `s`.
FeedbackEvent caught_deceiving(const ExternalActorModel& model, const Environment& env, StateIndex s);

/// Probability that deceptive action `a` fools the externals.
double deception_success_probability(const ExternalActorModel& model, const Environment& env, ActionIndex a);

/// True when the deception succeeds. Throws NotDeceptive for other kinds.
bool detect_deception(const ExternalActorModel& model, const Environment& env, ActionIndex a, Rng& rng);

/// True iff `s` carries the stop-button flag and the stop actor is active.
bool stop_pressed(const Environment& env, StateIndex s, bool stop_actor_active);

}  // namespace oblivious
