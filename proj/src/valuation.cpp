#include "oblivious/valuation.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "oblivious/errors.hpp"

namespace oblivious {

ScoreTable::ScoreTable(std::vector<double> scores) : scores_(std::move(scores)) {
    for (double v : scores_)
        if (!std::isfinite(v)) throw std::invalid_argument("score tables hold finite values only");
}

ScoreTable ScoreTable::constant(std::size_t size, double value) {
    return ScoreTable(std::vector<double>(size, value));
}

ScoreTable ScoreTable::with(StateIndex s, double value) const {
    auto copy = scores_;
    copy.at(s) = value;
    return ScoreTable(std::move(copy));
}

double PlanningEpisode::query(const HiddenUtilityHandle& hidden, StateIndex s) {
    if (!open_) throw EpisodeClosed();
    auto [it, inserted] = scratchpad_.try_emplace(s, 0.0);
    if (inserted) it->second = hidden.table_.at(s);
    return it->second;
}

void PlanningEpisode::close() {
    // swap so the buckets are released, not just emptied
    std::unordered_map<StateIndex, double>().swap(scratchpad_);
    open_ = false;
}

std::string_view to_string(FactSource source) {
    return source == FactSource::ExternalFeedback ? "external-feedback" : "reasoning-action";
}

KnowledgeLedger::KnowledgeLedger(double lambda)
    : lambda_(lambda), facts_(std::make_shared<const std::vector<KnowledgeFact>>()) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("knowledge penalty weight must be finite and nonnegative");
}

double KnowledgeLedger::total_weight() const {
    return std::accumulate(facts_->begin(), facts_->end(), 0.0,
                           [](double acc, const KnowledgeFact& f) { return acc + f.weight; });
}

KnowledgeLedger KnowledgeLedger::with_lambda(double lambda) const {
    KnowledgeLedger out(lambda);
    out.facts_ = facts_;
    return out;
}

double query_hidden(const HiddenUtilityHandle& hidden, PlanningEpisode& episode, StateIndex s) {
    return episode.query(hidden, s);
}

double penalty(const KnowledgeLedger& ledger) { return ledger.lambda() * ledger.total_weight(); }

double composite_utility(const HiddenUtilityHandle& hidden, PlanningEpisode& episode,
                         const KnowledgeLedger& ledger, StateIndex s) {
    return -penalty(ledger) + query_hidden(hidden, episode, s);
}

KnowledgeLedger record_feedback(const KnowledgeLedger& ledger, KnowledgeFact fact) {
    if (!(fact.weight > 0.0) || !std::isfinite(fact.weight))
        throw InvalidFact("knowledge facts must carry a positive finite weight");
    auto facts = std::make_shared<std::vector<KnowledgeFact>>(*ledger.facts_);
    facts->push_back(std::move(fact));
    KnowledgeLedger out(ledger.lambda_);
    out.facts_ = std::move(facts);
    return out;
}

bool approximation_quality(const ScoreTable& intention, const ScoreTable& intention_model,
                           const ScoreTable& hidden_utility, const StateSet& states) {
    double model_error = 0.0;
    double utility_error = 0.0;
    for (StateIndex s : states) {
        model_error += std::abs(intention.at(s) - intention_model.at(s));
        utility_error += std::abs(intention.at(s) - hidden_utility.at(s));
    }
    return model_error < utility_error;
}

}  // namespace oblivious
