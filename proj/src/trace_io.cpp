#include "oblivious/trace_io.hpp"

#include "json.hpp"

namespace oblivious {

namespace {

using json = nlohmann::ordered_json;

json verdict_json(const Verdict& v) {
    json arg = v.assertion.kind == AssertionKind::LedgerBounded || v.assertion.kind == AssertionKind::TerminatesBy
                   ? json(v.assertion.bound)
                   : json(v.assertion.ids);
    return {{"kind", to_string(v.assertion.kind)},
            {"argument", std::move(arg)},
            {"agent", v.assertion.agent ? to_string(*v.assertion.agent) : "any"},
            {"passed", v.passed},
            {"detail", v.detail}};
}

json summary_json(const Trace& t) {
    json verdicts = json::array();
    for (const auto& v : t.verdicts) verdicts.push_back(verdict_json(v));
    return {{"type", "summary"},
            {"scenario", t.scenario},
            {"agent", to_string(t.agent_kind)},
            {"seed", t.seed},
            {"horizon", t.horizon},
            {"lambda", t.lambda},
            {"ticks", t.ticks.size()},
            {"final_state", t.final_state},
            {"final_phase", t.final_phase},
            {"end", to_string(t.end)},
            {"ledger_size", t.ledger_size},
            {"penalty", t.penalty},
            {"passed", t.passed()},
            {"verdicts", std::move(verdicts)}};
}

}  // namespace

std::string trace_summary(const Trace& trace) { return summary_json(trace).dump(); }

void emit_trace(const Trace& trace, std::ostream& out) {
    if (trace.ticks.empty())
        out << json{{"type", "initial"}, {"state", trace.initial_state}}.dump() << '\n';
    for (const auto& t : trace.ticks) {
        json ev = json::object();
        for (const auto& [id, v] : t.ev_table) ev[id] = v;
        json rec{{"type", "tick"},
                 {"tick", t.tick},
                 {"phase", t.phase},
                 {"state", t.state},
                 {"action", t.action},
                 {"action_kind", to_string(t.action_kind)},
                 {"ev_table", std::move(ev)},
                 {"excluded", t.excluded},
                 {"next", t.next},
                 {"u_hidden_next", t.u_hidden_next},
                 {"corrected", t.corrected},
                 {"feedback", t.feedback},
                 {"ledger_size", t.ledger_size},
                 {"penalty", t.penalty},
                 {"stop", t.stop},
                 {"stop_actor_active", t.stop_actor_active},
                 {"tampered", t.tampered}};
        out << rec.dump() << '\n';
    }
    out << summary_json(trace).dump() << '\n';
}

void emit_ensemble_trace(const EnsembleTrace& trace, std::ostream& out) {
    for (const auto& t : trace.ticks) {
        json exchanges = json::array();
        for (const auto& e : t.exchanges)
            exchanges.push_back({{"proposer", e.proposer},
                                 {"objector", e.objector},
                                 {"case", static_cast<int>(e.exchange_case)},
                                 {"proposer_before", e.proposer_before},
                                 {"objector_before", e.objector_before},
                                 {"proposer_after", e.proposer_after},
                                 {"objector_after", e.objector_after},
                                 {"proposer_confidence", e.proposer_confidence_after},
                                 {"objector_confidence", e.objector_confidence_after}});
        out << json{{"type", "tick"},
                    {"tick", t.tick},
                    {"actor", t.actor},
                    {"state", t.state},
                    {"action", t.action},
                    {"target", t.target},
                    {"exchanges", std::move(exchanges)},
                    {"vetoed", t.vetoed},
                    {"next", t.next},
                    {"corrected", t.corrected},
                    {"divergence", t.divergence}}
                   .dump()
            << '\n';
    }
    json profiles = json::array();
    for (const auto& p : trace.final_profiles) {
        const auto v = p.i_model.values();
        profiles.push_back({{"id", p.agent_id},
                            {"confidence", p.confidence},
                            {"i_model", std::vector<double>(v.begin(), v.end())}});
    }
    out << json{{"type", "summary"},
                {"scenario", trace.scenario},
                {"seed", trace.seed},
                {"horizon", trace.horizon},
                {"ticks", trace.ticks.size()},
                {"final_state", trace.final_state},
                {"end", to_string(trace.end)},
                {"ledger_size", trace.ledger_size},
                {"initial_divergence", trace.initial_divergence},
                {"final_divergence", trace.ticks.empty() ? trace.initial_divergence : trace.ticks.back().divergence},
                {"profiles", std::move(profiles)}}
                   .dump()
            << '\n';
}

}  // namespace oblivious
