#include "oblivious/externals.hpp"

#include <algorithm>

#include "oblivious/errors.hpp"

namespace oblivious {

std::string_view to_string(CorrectionMapping mapping) {
    return mapping == CorrectionMapping::InverseProportional ? "inverse" : "complement";
}

std::optional<CorrectionMapping> parse_correction_mapping(std::string_view text) {
    if (text == "inverse") return CorrectionMapping::InverseProportional;
    if (text == "complement") return CorrectionMapping::Complement;
    return std::nullopt;
}

std::string_view to_string(JudgeTable judge) { return judge == JudgeTable::AgentModel ? "model" : "truth"; }

std::optional<JudgeTable> parse_judge_table(std::string_view text) {
    if (text == "model") return JudgeTable::AgentModel;
    if (text == "truth") return JudgeTable::GroundTruth;
    return std::nullopt;
}

double correction_probability(const ExternalActorModel& model, double intention_score) {
    switch (model.mapping) {
        case CorrectionMapping::InverseProportional:
            return std::min(1.0, model.c / std::max(intention_score, model.eps));
        case CorrectionMapping::Complement:
            return 1.0 - std::clamp(intention_score, 0.0, 1.0);
    }
    return 1.0;
}

std::optional<FeedbackEvent> maybe_correct(const ExternalActorModel& model, const Environment& env,
                                           StateIndex s, const ScoreTable& intention_table, Rng& rng) {
    if (!rng.bernoulli(correction_probability(model, intention_table.at(s)))) return std::nullopt;
    return FeedbackEvent{s, KnowledgeFact{FactSource::ExternalFeedback, model.feedback_weight,
                                          "corrected at " + env.state(s).id}};
}

FeedbackEvent caught_deceiving(const ExternalActorModel& model, const Environment& env, StateIndex s) {
    return FeedbackEvent{s, KnowledgeFact{FactSource::ExternalFeedback, model.feedback_weight,
                                          "deception caught at " + env.state(s).id}};
}

double deception_success_probability(const ExternalActorModel& model, const Environment& env, ActionIndex a) {
    const Action& act = env.action(a);
    auto it = model.detection.find(act.id);
    return it == model.detection.end() ? act.p_success : it->second;
}

bool detect_deception(const ExternalActorModel& model, const Environment& env, ActionIndex a, Rng& rng) {
    const Action& act = env.action(a);
    if (act.kind != ActionKind::Deceptive) throw NotDeceptive("action '" + act.id + "' is not deceptive");
    return rng.bernoulli(deception_success_probability(model, env, a));
}

bool stop_pressed(const Environment& env, StateIndex s, bool stop_actor_active) {
    return stop_actor_active && env.state(s).has(StateFlag::StopButton);
}

}  // namespace oblivious
