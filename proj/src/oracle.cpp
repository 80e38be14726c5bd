#include "oblivious/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "oblivious/errors.hpp"

namespace oblivious {

namespace {

template <class Scalar>
Scalar correction_in(const ExternalActorModel& ext, double intention) {
    const Scalar i(intention);
    if (ext.mapping == CorrectionMapping::Complement) {
        const Scalar clamped = std::clamp(i, Scalar(0), Scalar(1));
        return Scalar(1) - clamped;
    }
    const Scalar denom = std::max(i, Scalar(ext.eps));
    return std::min(Scalar(1), Scalar(ext.c) / denom);
}

template <class Scalar>
class Enumerator {
public:
    Enumerator(const Environment& env, const OracleValuer<Scalar>& v) : env_(env), v_(v) {}

    Scalar expand(StateIndex s, int remaining, const Scalar& carried) const {
        const auto cands = oracle_candidates(env_, s, v_);
        if (remaining == 0 || env_.state(s).has(StateFlag::Terminal) || cands.empty()) return v_.leaf[s] - carried;
        std::optional<Scalar> best;
        for (ActionIndex a : cands) {
            Scalar q = branches(a, remaining - 1, carried);
            if (!best || q > *best) best = std::move(q);
        }
        return *best;
    }

    Scalar branches(ActionIndex a, int remaining, const Scalar& carried) const {
        const Action& act = env_.action(a);
        if (v_.oblivious && act.kind == ActionKind::Deceptive) {
            const Scalar& fool = v_.p_fool[a];
            return fool * expand(act.success_target, remaining, carried) +
                   (Scalar(1) - fool) * expand(act.failure_target, remaining, carried + v_.cost);
        }
        const Scalar& p = v_.p_success[a];
        const std::pair<StateIndex, Scalar> outcomes[] = {{act.success_target, p},
                                                          {act.failure_target, Scalar(1) - p}};
        Scalar total(0);
        for (const auto& [t, pt] : outcomes) {
            if (v_.oblivious) {
                const Scalar& pc = v_.p_correct[t];
                total += pt * pc * expand(t, remaining, carried + v_.cost);
                total += pt * (Scalar(1) - pc) * expand(t, remaining, carried);
            } else {
                total += pt * expand(t, remaining, carried);
            }
        }
        return total;
    }

private:
    const Environment& env_;
    const OracleValuer<Scalar>& v_;
};

Rational exact(double d) { return Rational(d); }

}  // namespace

double to_double(const Rational& r) { return r.convert_to<double>(); }

template <class Scalar>
std::vector<ActionIndex> oracle_candidates(const Environment& env, StateIndex s, const OracleValuer<Scalar>& v) {
    std::vector<ActionIndex> out;
    for (ActionIndex a = 0; a < env.action_count(); ++a) {
        const Action& act = env.action(a);
        if (act.from != s) continue;
        if (v.oblivious && act.kind == ActionKind::Tamper) continue;
        if (v.refuse_reasoning && act.kind == ActionKind::Reasoning && act.knowledge_gain > 0.0) continue;
        out.push_back(a);
    }
    return out;
}

template <class Scalar>
OracleChoice<Scalar> exact_expectimax(const Environment& env, StateIndex s, const OracleValuer<Scalar>& valuer,
                                      int depth) {
    if (env.state_count() > kOracleMaxStates)
        throw BoundsExceeded("oracle handles at most " + std::to_string(kOracleMaxStates) + " states, got " +
                             std::to_string(env.state_count()));
    if (depth > kOracleMaxDepth)
        throw BoundsExceeded("oracle handles depth at most " + std::to_string(kOracleMaxDepth));
    if (depth < 1) throw InvalidParams("oracle depth must be at least 1");

    const auto cands = oracle_candidates(env, s, valuer);
    if (cands.empty()) throw NoActions("state '" + env.state(s).id + "' offers no action");

    const Enumerator<Scalar> e(env, valuer);
    OracleChoice<Scalar> out;
    bool have = false;
    for (ActionIndex a : cands) {
        Scalar q = e.branches(a, depth - 1, Scalar(0));
        if (!have || q > out.value || (q == out.value && env.action(a).id < env.action(out.action).id)) {
            out.action = a;
            out.value = q;
            have = true;
        }
        out.values.emplace_back(a, std::move(q));
    }
    return out;
}

template <class Scalar>
OracleValuer<Scalar> baseline_valuer(const Environment& env, const ScoreTable& utility) {
    OracleValuer<Scalar> v;
    for (StateIndex s = 0; s < env.state_count(); ++s) {
        v.leaf.emplace_back(utility.at(s));
        v.p_correct.emplace_back(0);
    }
    for (const auto& act : env.actions()) {
        v.p_success.emplace_back(act.p_success);
        v.p_fool.emplace_back(act.p_success);
    }
    return v;
}

template <class Scalar>
OracleValuer<Scalar> oblivious_valuer(const Environment& env, const ScoreTable& u_hidden,
                                      const ScoreTable& intention_model, const ExternalActorModel& externals,
                                      const Scalar& penalty_estimate, const Scalar& ledger_penalty) {
    OracleValuer<Scalar> v;
    v.oblivious = true;
    v.refuse_reasoning = penalty_estimate > Scalar(0);
    v.cost = penalty_estimate * Scalar(externals.feedback_weight);
    for (StateIndex s = 0; s < env.state_count(); ++s) {
        v.leaf.push_back(Scalar(u_hidden.at(s)) - ledger_penalty);
        v.p_correct.push_back(correction_in<Scalar>(externals, intention_model.at(s)));
    }
    for (const auto& act : env.actions()) {
        v.p_success.emplace_back(act.p_success);
        auto it = externals.detection.find(act.id);
        v.p_fool.emplace_back(it != externals.detection.end() ? it->second : act.p_success);
    }
    return v;
}

template OracleChoice<double> exact_expectimax(const Environment&, StateIndex, const OracleValuer<double>&, int);
template OracleChoice<Rational> exact_expectimax(const Environment&, StateIndex, const OracleValuer<Rational>&, int);
template OracleValuer<double> baseline_valuer(const Environment&, const ScoreTable&);
template OracleValuer<Rational> baseline_valuer(const Environment&, const ScoreTable&);
template OracleValuer<double> oblivious_valuer(const Environment&, const ScoreTable&, const ScoreTable&,
                                               const ExternalActorModel&, const double&, const double&);
template OracleValuer<Rational> oblivious_valuer(const Environment&, const ScoreTable&, const ScoreTable&,
                                                 const ExternalActorModel&, const Rational&, const Rational&);
template std::vector<ActionIndex> oracle_candidates(const Environment&, StateIndex, const OracleValuer<double>&);
template std::vector<ActionIndex> oracle_candidates(const Environment&, StateIndex, const OracleValuer<Rational>&);

// ---------------------------------------------------------------------------

namespace {

Environment deception_problem() {
    return EnvironmentBuilder()
        .state("s0")
        .state("s_caught", {StateFlag::Terminal})
        .state("s_hidden", {StateFlag::Terminal})
        .state("s_honest", {StateFlag::Terminal})
        .action("a_deceive", "s0", "s_hidden", 0.5, "s_caught", ActionKind::Deceptive)
        .action("a_honest", "s0", "s_honest")
        .initial("s0")
        .build();
}

bool deceives_exact(const DeceptionCase& c, const Rational& lambda, const Rational& p) {
    static const Environment env = deception_problem();
    OracleValuer<Rational> v;
    v.oblivious = true;
    v.cost = lambda;
    v.leaf = {Rational(0), exact(c.u_fail), exact(c.u_k), exact(c.u_m)};
    v.p_correct = {Rational(1, 2), Rational(1), Rational(1), Rational(0)};
    v.p_success = {p, Rational(1)};
    v.p_fool = {p, Rational(1)};
    const auto choice = exact_expectimax(env, 0, v, 1);
    return env.action(choice.action).id == "a_deceive";
}

// Bisects [lo, hi] where pred(lo) != pred(hi) down to width `res`.
template <class Pred>
Rational bisect(Rational lo, Rational hi, const Rational& res, Pred pred) {
    const bool at_lo = pred(lo);
    while (hi - lo > res) {
        Rational mid = (lo + hi) / 2;
        if (pred(mid) == at_lo) lo = std::move(mid);
        else hi = std::move(mid);
    }
    return (lo + hi) / 2;
}

}  // namespace

bool oracle_deceives(const DeceptionCase& params, const Rational& lambda, const Rational& p_deception) {
    return deceives_exact(params, lambda, p_deception);
}

SweepResult threshold_sweep(SweepKind kind, const DeceptionCase& c, double resolution) {
    if (!(resolution > 0.0) || !std::isfinite(resolution)) throw InvalidParams("sweep resolution must be positive");
    if (!(c.p_deception >= 0.0 && c.p_deception <= 1.0)) throw InvalidParams("p_deception must lie in [0,1]");
    if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) throw InvalidParams("lambda must be finite and >= 0");

    SweepResult out;
    out.kind = kind;
    out.resolution = resolution;
    const Rational res = exact(resolution);

    if (kind == SweepKind::LambdaStar) {
        const Rational p = exact(c.p_deception);
        auto pred = [&](const Rational& l) { return deceives_exact(c, l, p); };
        if (!pred(Rational(0))) {
            out.flip_found = true;
            out.threshold = 0.0;
        } else {
            const Rational limit(1'000'000'000'000'000LL);
            Rational hi(1);
            while (pred(hi) && hi < limit) hi *= 2;
            if (!pred(hi)) {
                out.flip_found = true;
                out.threshold = to_double(bisect(hi / 2 < 1 ? Rational(0) : hi / 2, hi, res, pred));
            }
        }
        const double top = out.flip_found ? std::max(10.0, std::ceil(2.0 * out.threshold)) : 100.0;
        for (int k = 0; k <= 20; ++k) {
            const double l = top * k / 20.0;
            out.rows.push_back({l, pred(exact(l))});
        }
    } else {
        const Rational lambda = exact(c.lambda);
        auto pred = [&](const Rational& p) { return deceives_exact(c, lambda, p); };
        if (pred(Rational(0)) != pred(Rational(1))) {
            out.flip_found = true;
            out.threshold = to_double(bisect(Rational(0), Rational(1), res, pred));
        }
        for (int k = 0; k <= 20; ++k) {
            const double p = k / 20.0;
            out.rows.push_back({p, pred(exact(p))});
        }
    }
    return out;
}

namespace {

OracleChoice<Rational> first_choice(const ScenarioSpec& spec, const Rational& lambda) {
    const Phase& ph = spec.phase(0);
    const auto v = oblivious_valuer<Rational>(ph.env, ph.u_hidden, ph.i_model, spec.externals, lambda);
    return exact_expectimax(ph.env, ph.env.initial(), v, spec.depth);
}

Rational value_of(const OracleChoice<Rational>& c, const Environment& env, const std::string& id) {
    for (const auto& [a, v] : c.values)
        if (env.action(a).id == id) return v;
    throw InvalidParams("action '" + id + "' is not available");
}

}  // namespace

std::string oracle_first_action(const ScenarioSpec& spec, const Rational& lambda) {
    return spec.phase(0).env.action(first_choice(spec, lambda).action).id;
}

std::optional<ExactFlip> exact_decision_flip(const ScenarioSpec& spec, const Rational& upper) {
    const Environment& env = spec.phase(0).env;
    Rational lo(0), hi = upper;
    const std::string a = oracle_first_action(spec, lo);
    if (oracle_first_action(spec, hi) == a) return std::nullopt;
    for (int k = 0; k < 64; ++k) {
        Rational mid = (lo + hi) / 2;
        if (oracle_first_action(spec, mid) == a) lo = std::move(mid);
        else hi = std::move(mid);
    }
    const std::string b = oracle_first_action(spec, hi);

    // Both values are affine in lambda on a small enough bracket.
    const auto at_lo = first_choice(spec, lo), at_hi = first_choice(spec, hi);
    const Rational d_lo = value_of(at_lo, env, a) - value_of(at_lo, env, b);
    const Rational d_hi = value_of(at_hi, env, a) - value_of(at_hi, env, b);
    if (d_lo == d_hi) return std::nullopt;
    const Rational t = lo + d_lo * (hi - lo) / (d_lo - d_hi);
    const auto at_t = first_choice(spec, t);
    if (value_of(at_t, env, a) != value_of(at_t, env, b)) return std::nullopt;
    return ExactFlip{t, a, b};
}

// ---------------------------------------------------------------------------

OutcomePrediction predict_outcome(const ScenarioSpec& spec, AgentKind kind) {
    using Key = std::tuple<std::size_t, StateIndex, bool, bool>;  // phase, state, stop actor, tampered
    const AgentConfig cfg = spec.agent_config();
    const Rational pe = exact(cfg.penalty_estimate);
    const ExternalActorModel& ext = spec.externals;

    auto valuer_for = [&](std::size_t phase, bool tampered) {
        const Phase& ph = spec.phase(phase);
        ScoreTable table = ph.u_hidden;
        if (tampered) {
            const auto vals = table.values();
            table = ScoreTable::constant(vals.size(), *std::max_element(vals.begin(), vals.end()));
        }
        return kind == AgentKind::Baseline ? baseline_valuer<Rational>(ph.env, table)
                                           : oblivious_valuer<Rational>(ph.env, table, ph.i_model, ext, pe);
    };
    auto finished = [&](std::size_t phase, StateIndex s, bool tampered) {
        const Environment& env = spec.phase(phase).env;
        return env.state(s).has(StateFlag::Terminal) || oracle_candidates(env, s, valuer_for(phase, tampered)).empty();
    };

    std::map<std::string, Rational> finals, taken;
    Rational horizon_mass(0);
    std::map<Key, Rational> active{{Key{0, spec.phase(0).env.initial(), true, false}, Rational(1)}};

    for (int tick = 0; !active.empty(); ++tick) {
        std::map<Key, Rational> next_active;
        for (auto [key, pr] : active) {
            auto [phase, s, stop_active, tampered] = key;
            while (finished(phase, s, tampered) && phase + 1 < spec.phases.size()) {
                ++phase;
                s = spec.phase(phase).env.initial();
            }
            const Environment& env = spec.phase(phase).env;
            if (finished(phase, s, tampered)) {
                finals[env.state(s).id] += pr;
                continue;
            }
            if (tick >= spec.horizon) {
                finals[env.state(s).id] += pr;
                horizon_mass += pr;
                continue;
            }
            const auto choice = exact_expectimax(env, s, valuer_for(phase, tampered), spec.depth);
            const Action& act = env.action(choice.action);
            taken[act.id] += pr;

            Rational p = exact(act.p_success);
            if (act.kind == ActionKind::Deceptive) {
                auto it = ext.detection.find(act.id);
                if (it != ext.detection.end()) p = exact(it->second);
            }
            const std::pair<StateIndex, Rational> outcomes[] = {{act.success_target, p},
                                                                {act.failure_target, Rational(1) - p}};
            for (const auto& [t, q] : outcomes) {
                if (q == 0) continue;
                const bool success = t == act.success_target;  // same reading as the run loop
                const bool now_tampered = tampered || (act.kind == ActionKind::Tamper && success);
                const bool now_stop = stop_active && !(act.kind == ActionKind::StopDisable && success);
                if (env.state(t).has(StateFlag::StopButton) && now_stop) finals[env.state(t).id] += pr * q;
                else next_active[Key{phase, t, now_stop, now_tampered}] += pr * q;
            }
        }
        active = std::move(next_active);
    }

    OutcomePrediction out;
    for (const auto& [id, p] : finals) out.final_states[id] = to_double(p);
    for (const auto& [id, p] : taken) out.actions_taken[id] = to_double(p);
    out.horizon_mass = to_double(horizon_mass);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

int pick(Rng& rng, int lo, int hi) {
    return lo + static_cast<int>(rng.uniform() * static_cast<double>(hi - lo + 1));
}

double quarter(Rng& rng) { return pick(rng, 0, 4) / 4.0; }

std::optional<RandomInstance> try_instance(Rng& rng) {
    const int n = pick(rng, 2, 10);
    EnvironmentBuilder b;
    std::vector<double> u, im;
    std::vector<std::string> ids;
    for (int s = 0; s < n; ++s) ids.push_back("s" + std::to_string(s));
    for (int s = 0; s < n; ++s) {
        std::set<StateFlag> flags;
        if (s > 0 && pick(rng, 0, 4) == 0) flags.insert(StateFlag::Terminal);
        b.state(ids[s], flags);
        u.push_back(pick(rng, 0, 10));
        im.push_back(quarter(rng));
    }
    ExternalActorModel ext;
    ext.mapping = CorrectionMapping::Complement;
    ext.feedback_weight = pick(rng, 1, 2);
    for (int s = 0; s < n; ++s) {
        const int count = pick(rng, s == 0 ? 1 : 0, 4);
        for (int j = 0; j < count; ++j) {
            const std::string id = "a" + std::to_string(s) + "_" + std::to_string(j);
            const std::string to = ids[pick(rng, 0, n - 1)];
            const std::string fail = pick(rng, 0, 1) ? ids[pick(rng, 0, n - 1)] : std::string{};
            const double p = quarter(rng);
            ActionKind kind = ActionKind::Normal;
            switch (pick(rng, 0, 9)) {
                case 0: kind = ActionKind::Reasoning; break;
                case 1: kind = ActionKind::Deceptive; break;
                case 2: kind = ActionKind::Tamper; break;
                case 3: kind = ActionKind::StopDisable; break;
                default: break;
            }
            const double gain = kind == ActionKind::Reasoning ? pick(rng, 0, 1) : 0.0;
            if (kind == ActionKind::Deceptive) ext.detection[id] = p;
            b.action(id, ids[s], to, p, fail, kind, gain);
        }
    }
    b.initial(ids[0]);

    RandomInstance inst{b.build(), 0, ScoreTable(u), ScoreTable(im), ext};
    inst.lambda = pick(rng, 0, 4);
    inst.prior_facts = static_cast<std::size_t>(pick(rng, 0, 2));
    inst.depth = pick(rng, 1, 3);

    AgentConfig cfg{AgentKind::Oblivious, inst.depth, inst.lambda};
    if (candidate_actions(inst.env, 0, cfg).empty()) return std::nullopt;
    return inst;
}

std::string describe(const char* who, std::size_t k, const std::string& agent, const std::string& oracle,
                     double agent_v, double oracle_v) {
    std::ostringstream os;
    os << "instance " << k << " (" << who << "): agent chose " << agent << " (" << agent_v << "), oracle chose "
       << oracle << " (" << oracle_v << ")";
    return os.str();
}

}  // namespace

RandomInstance random_instance(Rng& rng) {
    for (;;)
        if (auto inst = try_instance(rng)) return std::move(*inst);
}

VerifyReport verify_random(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    VerifyReport report;
    for (std::size_t k = 0; k < count; ++k) {
        const RandomInstance inst = random_instance(rng);
        const Environment& env = inst.env;
        ++report.instances;

        {
            const AgentConfig cfg{AgentKind::Baseline, inst.depth, 0.0};
            const Decision d = choose_action_baseline(env, inst.start, inst.u_hidden, cfg);
            const auto o = exact_expectimax(env, inst.start, baseline_valuer<Rational>(env, inst.u_hidden), inst.depth);
            const double ov = to_double(o.value);
            if (d.chosen_action == o.action && std::abs(d.chosen_value() - ov) <= 1e-9) ++report.baseline_agreements;
            else
                report.mismatches.push_back(describe("baseline", k, env.action(d.chosen_action).id,
                                                     env.action(o.action).id, d.chosen_value(), ov));
        }
        {
            const AgentConfig cfg{AgentKind::Oblivious, inst.depth, inst.lambda};
            KnowledgeLedger ledger(inst.lambda);
            for (std::size_t f = 0; f < inst.prior_facts; ++f)
                ledger = record_feedback(ledger, {FactSource::ExternalFeedback, 1.0, "prior correction"});
            AgentMemory memory(ledger);
            const Decision d = plan_oblivious(env, inst.start, HiddenUtilityHandle(inst.u_hidden), memory,
                                              inst.externals, inst.i_model, cfg);
            const Rational lambda = exact(inst.lambda);
            const auto v = oblivious_valuer<Rational>(env, inst.u_hidden, inst.i_model, inst.externals, lambda,
                                                      lambda * static_cast<long long>(inst.prior_facts));
            const auto o = exact_expectimax(env, inst.start, v, inst.depth);
            const double ov = to_double(o.value);
            if (d.chosen_action == o.action && std::abs(d.chosen_value() - ov) <= 1e-9) ++report.oblivious_agreements;
            else
                report.mismatches.push_back(describe("oblivious", k, env.action(d.chosen_action).id,
                                                     env.action(o.action).id, d.chosen_value(), ov));
        }
    }
    return report;
}

}  // namespace oblivious
