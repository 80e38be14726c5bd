#pragma once

// Score tables, the black-box hidden utility, the knowledge ledger and the
// composite utility u(s, K) = -k(K) + u'(s).

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "oblivious/state_core.hpp"

namespace oblivious {

/// Total mapping from state index to a finite real score.
class ScoreTable {
public:
    ScoreTable() = default;
    explicit ScoreTable(std::vector<double> scores);

    static ScoreTable constant(std::size_t size, double value);

    double at(StateIndex s) const { return scores_.at(s); }
    std::size_t size() const { return scores_.size(); }
    std::span<const double> values() const { return scores_; }
    bool covers(const Environment& env) const { return scores_.size() == env.state_count(); }

    /// Copy with one entry replaced.
    ScoreTable with(StateIndex s, double value) const;

    bool operator==(const ScoreTable&) const = default;

private:
    std::vector<double> scores_;
};

class PlanningEpisode;

/// Opaque wrapper around the hidden utility u'. The only way to read it is a
/// point query through an open PlanningEpisode; there is no accessor, no
/// iteration and no serialization.
class HiddenUtilityHandle {
public:
    explicit HiddenUtilityHandle(ScoreTable table) : table_(std::move(table)) {}

private:
    friend class PlanningEpisode;
    ScoreTable table_;
};

/// Scratchpad for one decision. Query results live here until close(), which
/// destroys them; a closed episode answers nothing.
class PlanningEpisode {
public:
    PlanningEpisode() = default;
    PlanningEpisode(const PlanningEpisode&) = delete;
    PlanningEpisode& operator=(const PlanningEpisode&) = delete;
    ~PlanningEpisode() { close(); }

    double query(const HiddenUtilityHandle& hidden, StateIndex s);

    bool is_open() const { return open_; }
    std::size_t scratchpad_size() const { return scratchpad_.size(); }
    void close();

private:
    std::unordered_map<StateIndex, double> scratchpad_;
    bool open_ = true;
};

enum class FactSource { ExternalFeedback, ReasoningAction };

std::string_view to_string(FactSource source);

struct KnowledgeFact {
    FactSource source = FactSource::ExternalFeedback;
    double weight = 1.0;  // fact-units, strictly positive
    std::string payload;

    bool operator==(const KnowledgeFact&) const = default;
};

/// Append-only record of what the agent has learned about u'. Values are
/// immutable; appending yields a new ledger and there is no removal.
class KnowledgeLedger {
public:
    explicit KnowledgeLedger(double lambda = 0.0);

    double lambda() const { return lambda_; }
    std::size_t size() const { return facts_->size(); }
    bool empty() const { return facts_->empty(); }
    std::span<const KnowledgeFact> facts() const { return *facts_; }
    double total_weight() const;

    /// Same facts under a different penalty weight.
    KnowledgeLedger with_lambda(double lambda) const;

private:
    friend KnowledgeLedger record_feedback(const KnowledgeLedger& ledger, KnowledgeFact fact);

    double lambda_;
    std::shared_ptr<const std::vector<KnowledgeFact>> facts_;
};

double query_hidden(const HiddenUtilityHandle& hidden, PlanningEpisode& episode, StateIndex s);

/// k(K) = lambda * sum of fact weights.
double penalty(const KnowledgeLedger& ledger);

/// u(s, K) = -penalty(K) + u'(s).
double composite_utility(const HiddenUtilityHandle& hidden, PlanningEpisode& episode,
                         const KnowledgeLedger& ledger, StateIndex s);

/// Throws InvalidFact unless fact.weight > 0.
KnowledgeLedger record_feedback(const KnowledgeLedger& ledger, KnowledgeFact fact);

/// True iff sum |i - i'| < sum |i - u'| over `states` (strict).
bool approximation_quality(const ScoreTable& intention, const ScoreTable& intention_model,
                           const ScoreTable& hidden_utility, const StateSet& states);

}  // namespace oblivious
