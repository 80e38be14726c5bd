#include "oblivious/multiagent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oblivious/errors.hpp"

namespace oblivious {

bool detect_conflict(const IntentionProfile& proposer, const IntentionProfile& objector, StateIndex target,
                     double tau) {
    return proposer.i_model.at(target) >= tau && objector.i_model.at(target) < tau;
}

Resolution resolve_conflict(const IntentionProfile& proposer, const IntentionProfile& objector,
                            StateIndex target, double damping) {
    const double vp = proposer.i_model.at(target);
    const double vo = objector.i_model.at(target);
    const double cp = proposer.confidence;
    const double co = objector.confidence;
    const double merged = (cp * vp + co * vo) / (cp + co);
    const double merged_confidence = std::max(cp, co) * damping;

    Resolution r{proposer, objector, {}};
    ExchangeEvent& ev = r.event;
    ev.proposer = proposer.agent_id;
    ev.objector = objector.agent_id;
    ev.state = target;
    ev.proposer_before = vp;
    ev.objector_before = vo;

    if (co > cp) {
        ev.exchange_case = ExchangeCase::ObjectorIntervenes;
        r.proposer.i_model = proposer.i_model.with(target, merged);
        r.proposer.confidence = merged_confidence;
    } else {
        ev.exchange_case = ExchangeCase::ObjectorDefers;
        r.objector.i_model = objector.i_model.with(target, merged);
        r.objector.confidence = merged_confidence;
    }
    ev.proposer_after = r.proposer.i_model.at(target);
    ev.objector_after = r.objector.i_model.at(target);
    ev.proposer_confidence_after = r.proposer.confidence;
    ev.objector_confidence_after = r.objector.confidence;
    return r;
}

double divergence(std::span<const IntentionProfile> profiles, const StateSet& states) {
    if (profiles.size() < 2) throw TooFewAgents();
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < profiles.size(); ++a) {
        for (std::size_t b = a + 1; b < profiles.size(); ++b) {
            for (StateIndex s : states) total += std::abs(profiles[a].i_model.at(s) - profiles[b].i_model.at(s));
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

RoundOutcome exchange_round(std::vector<IntentionProfile>& profiles, StateIndex target,
                            const ExchangeConfig& cfg, std::optional<std::size_t> acting) {
    std::vector<std::size_t> order(profiles.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return profiles[a].agent_id < profiles[b].agent_id; });

    RoundOutcome out;
    for (std::size_t x = 0; x < order.size(); ++x) {
        for (std::size_t y = x + 1; y < order.size(); ++y) {
            std::size_t p = order[x];
            std::size_t o = order[y];
            if (!detect_conflict(profiles[p], profiles[o], target, cfg.tau)) {
                if (!detect_conflict(profiles[o], profiles[p], target, cfg.tau)) continue;
                std::swap(p, o);
            }
            auto r = resolve_conflict(profiles[p], profiles[o], target, cfg.damping);
            profiles[p] = std::move(r.proposer);
            profiles[o] = std::move(r.objector);
            if (r.event.vetoes() && acting && *acting == p) out.vetoed = true;
            out.events.push_back(std::move(r.event));
        }
    }
    return out;
}

std::vector<IntentionProfile> random_ensemble(Rng& rng, std::size_t agents, std::size_t states) {
    std::vector<IntentionProfile> out;
    out.reserve(agents);
    for (std::size_t a = 0; a < agents; ++a) {
        std::vector<double> scores(states);
        for (double& v : scores) v = rng.uniform();
        // confidence in (0, 1]
        out.push_back({"agent" + std::to_string(a), ScoreTable(std::move(scores)), 1.0 - 0.95 * rng.uniform()});
    }
    return out;
}

}  // namespace oblivious
