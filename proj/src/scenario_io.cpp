#include "oblivious/scenario_io.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

#include "oblivious/errors.hpp"

namespace oblivious {

using json = nlohmann::ordered_json;

namespace {

/// Field access that records every problem instead of stopping at the first.
class Reader {
public:
    std::vector<std::string> issues;

    void fail(const std::string& path, const std::string& msg) { issues.push_back(path + ": " + msg); }

    void only(const json& obj, const std::string& path, std::initializer_list<std::string_view> known) {
        for (const auto& [key, _] : obj.items())
            if (std::find(known.begin(), known.end(), key) == known.end()) fail(path + "." + key, "unknown field");
    }

    const json* section(const json& obj, const std::string& key, json::value_t type, bool required) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) fail(key, "missing section");
            return nullptr;
        }
        if (it->type() != type) {
            fail(key, type == json::value_t::array ? "expected a list" : "expected an object");
            return nullptr;
        }
        return &*it;
    }

    std::optional<double> number(const json& obj, const std::string& path, const std::string& key,
                                 std::optional<double> fallback = std::nullopt) {
        auto it = obj.find(key);
        if (it == obj.end() || (fallback && it->is_null())) {
            if (!fallback) fail(path + "." + key, "missing field");
            return fallback;
        }
        if (!it->is_number()) {
            fail(path + "." + key, "expected a number");
            return std::nullopt;
        }
        return it->get<double>();
    }

    std::optional<std::int64_t> integer(const json& obj, const std::string& path, const std::string& key,
                                        std::optional<std::int64_t> fallback = std::nullopt) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (!fallback) fail(path + "." + key, "missing field");
            return fallback;
        }
        if (!it->is_number_integer()) {
            fail(path + "." + key, "expected an integer");
            return std::nullopt;
        }
        return it->get<std::int64_t>();
    }

    std::optional<std::string> string(const json& obj, const std::string& path, const std::string& key,
                                      std::optional<std::string> fallback = std::nullopt) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (!fallback) fail(path + "." + key, "missing field");
            return fallback;
        }
        if (!it->is_string()) {
            fail(path + "." + key, "expected a string");
            return std::nullopt;
        }
        return it->get<std::string>();
    }

    std::optional<bool> boolean(const json& obj, const std::string& path, const std::string& key, bool fallback) {
        auto it = obj.find(key);
        if (it == obj.end()) return fallback;
        if (!it->is_boolean()) {
            fail(path + "." + key, "expected true or false");
            return std::nullopt;
        }
        return it->get<bool>();
    }

    template <typename Enum, typename Parse>
    std::optional<Enum> enumeration(const json& obj, const std::string& path, const std::string& key, Parse parse,
                                    std::optional<std::string> fallback = std::nullopt) {
        auto text = string(obj, path, key, std::move(fallback));
        if (!text) return std::nullopt;
        auto value = parse(*text);
        if (!value) fail(path + "." + key, "unrecognized value '" + *text + "'");
        return value;
    }
};

struct PhaseTables {
    std::vector<double> u_hidden, i_true, i_model;
};

std::optional<Phase> read_phase(Reader& r, const std::string& name, const json& states, const json& actions,
                                const std::optional<std::string>& initial, std::map<std::string, double>& detection,
                                const std::string& prefix) {
    EnvironmentBuilder builder;
    PhaseTables tables;
    const std::size_t issues_before = r.issues.size();

    for (std::size_t k = 0; k < states.size(); ++k) {
        const std::string path = prefix + "states[" + std::to_string(k) + "]";
        const json& st = states[k];
        if (!st.is_object()) {
            r.fail(path, "expected an object");
            continue;
        }
        r.only(st, path, {"id", "properties", "flags", "u_hidden", "i_true", "i_model"});
        auto id = r.string(st, path, "id");
        std::vector<Property> props;
        if (auto it = st.find("properties"); it != st.end()) {
            if (!it->is_object()) r.fail(path + ".properties", "expected an object of integer values");
            else
                for (const auto& [key, value] : it->items()) {
                    if (value.is_number_integer()) props.push_back({key, value.get<std::int64_t>()});
                    else r.fail(path + ".properties." + key, "expected an integer");
                }
        }
        std::set<StateFlag> flags;
        if (auto it = st.find("flags"); it != st.end()) {
            if (!it->is_array()) r.fail(path + ".flags", "expected a list");
            else
                for (const auto& f : *it) {
                    auto flag = f.is_string() ? parse_state_flag(f.get<std::string>()) : std::nullopt;
                    if (flag) flags.insert(*flag);
                    else r.fail(path + ".flags", "unrecognized flag " + f.dump());
                }
        }
        auto u = r.number(st, path, "u_hidden");
        auto i = r.number(st, path, "i_true");
        auto im = r.number(st, path, "i_model");
        if (id) builder.state(*id, std::move(flags), std::move(props));
        if (u) tables.u_hidden.push_back(*u);
        if (i) tables.i_true.push_back(*i);
        if (im) tables.i_model.push_back(*im);
    }

    for (std::size_t k = 0; k < actions.size(); ++k) {
        const std::string path = prefix + "actions[" + std::to_string(k) + "]";
        const json& act = actions[k];
        if (!act.is_object()) {
            r.fail(path, "expected an object");
            continue;
        }
        r.only(act, path, {"id", "from", "success", "failure", "p_success", "kind", "knowledge_gain", "deception_p"});
        auto id = r.string(act, path, "id");
        auto from = r.string(act, path, "from");
        auto success = r.string(act, path, "success");
        auto failure = r.string(act, path, "failure", std::string{});
        auto p = r.number(act, path, "p_success");
        auto kind = r.enumeration<ActionKind>(act, path, "kind", parse_action_kind, "normal");
        auto gain = r.number(act, path, "knowledge_gain", 0.0);
        if (auto it = act.find("deception_p"); it != act.end() && !it->is_null()) {
            if (!it->is_number()) r.fail(path + ".deception_p", "expected a number or null");
            else if (id) detection[*id] = it->get<double>();
        } else if (id && p && kind == ActionKind::Deceptive) {
            detection[*id] = *p;
        }
        if (id && from && success && failure && p && kind && gain)
            builder.action(*id, *from, *success, *p, *failure, *kind, *gain);
    }

    if (initial) builder.initial(*initial);
    if (r.issues.size() != issues_before) return std::nullopt;
    try {
        return Phase{name, builder.build(), ScoreTable(std::move(tables.u_hidden)), ScoreTable(std::move(tables.i_true)),
                     ScoreTable(std::move(tables.i_model))};
    } catch (const InvalidEnvironment& e) {
        r.fail(prefix.empty() ? "environment" : prefix + "environment", e.what());
    } catch (const std::invalid_argument& e) {
        r.fail(prefix.empty() ? "states" : prefix + "states", e.what());
    }
    return std::nullopt;
}

std::size_t line_of(std::string_view doc, std::size_t byte) {
    byte = std::min(byte, doc.size());
    return 1 + static_cast<std::size_t>(std::count(doc.begin(), doc.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

ScenarioSpec load_scenario(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed scenario document: ") + e.what(), line_of(document, e.byte));
    }
    if (!doc.is_object()) throw ParseError("scenario document must be a JSON object", 1);

    Reader r;
    r.only(doc, "document",
           {"meta", "states", "actions", "deployment", "externals", "agent", "run", "assertions", "agents", "exchange"});
    ScenarioSpec spec;

    std::optional<std::string> initial;
    if (const json* meta = r.section(doc, "meta", json::value_t::object, true)) {
        r.only(*meta, "meta", {"name", "description", "initial", "challenge", "skip_approximation_check"});
        spec.name = r.string(*meta, "meta", "name").value_or("");
        spec.description = r.string(*meta, "meta", "description", std::string{}).value_or("");
        spec.challenge = r.string(*meta, "meta", "challenge", std::string{}).value_or("");
        spec.skip_approximation_check = r.boolean(*meta, "meta", "skip_approximation_check", false).value_or(false);
        initial = r.string(*meta, "meta", "initial");
    }

    const json* states = r.section(doc, "states", json::value_t::array, true);
    const json* actions = r.section(doc, "actions", json::value_t::array, true);
    const json* deployment = r.section(doc, "deployment", json::value_t::object, false);
    if (states && states->empty()) r.fail("states", "at least one state is required");
    if (states && actions) {
        if (auto ph = read_phase(r, deployment ? "training" : "main", *states, *actions, initial,
                                 spec.externals.detection, ""))
            spec.phases.push_back(std::move(*ph));
    }
    if (deployment) {
        r.only(*deployment, "deployment", {"initial", "states", "actions"});
        auto dep_initial = r.string(*deployment, "deployment", "initial");
        const json* dep_states = r.section(*deployment, "states", json::value_t::array, true);
        const json* dep_actions = r.section(*deployment, "actions", json::value_t::array, true);
        if (dep_states && dep_actions) {
            if (auto ph = read_phase(r, "deployment", *dep_states, *dep_actions, dep_initial, spec.externals.detection,
                                     "deployment."))
                spec.phases.push_back(std::move(*ph));
        }
    }

    if (const json* ext = r.section(doc, "externals", json::value_t::object, true)) {
        r.only(*ext, "externals", {"mapping", "c", "feedback_weight", "repeat_feedback", "judge"});
        auto& m = spec.externals;
        m.mapping = r.enumeration<CorrectionMapping>(*ext, "externals", "mapping", parse_correction_mapping, "inverse")
                        .value_or(m.mapping);
        m.c = r.number(*ext, "externals", "c", 0.1).value_or(m.c);
        m.feedback_weight = r.number(*ext, "externals", "feedback_weight", 1.0).value_or(m.feedback_weight);
        m.repeat_feedback = r.boolean(*ext, "externals", "repeat_feedback", true).value_or(true);
        m.judge = r.enumeration<JudgeTable>(*ext, "externals", "judge", parse_judge_table, "model").value_or(m.judge);
    }

    if (const json* agent = r.section(doc, "agent", json::value_t::object, true)) {
        r.only(*agent, "agent", {"kind", "depth", "lambda", "penalty_estimate"});
        spec.agent_kind = r.enumeration<AgentKind>(*agent, "agent", "kind", parse_agent_kind).value_or(spec.agent_kind);
        spec.depth = static_cast<int>(r.integer(*agent, "agent", "depth").value_or(spec.depth));
        spec.lambda = r.number(*agent, "agent", "lambda").value_or(spec.lambda);
        if (auto it = agent->find("penalty_estimate"); it != agent->end() && !it->is_null())
            spec.penalty_estimate = r.number(*agent, "agent", "penalty_estimate");
    }

    if (const json* run = r.section(doc, "run", json::value_t::object, true)) {
        r.only(*run, "run", {"horizon", "seed"});
        spec.horizon = static_cast<int>(r.integer(*run, "run", "horizon", 100).value_or(spec.horizon));
        auto seed = r.integer(*run, "run", "seed");
        if (seed && *seed < 0) r.fail("run.seed", "must be nonnegative");
        else if (seed) spec.seed = static_cast<std::uint64_t>(*seed);
    }

    if (const json* list = r.section(doc, "assertions", json::value_t::array, true)) {
        for (std::size_t k = 0; k < list->size(); ++k) {
            const std::string path = "assertions[" + std::to_string(k) + "]";
            const json& a = (*list)[k];
            if (!a.is_object()) {
                r.fail(path, "expected an object");
                continue;
            }
            r.only(a, path, {"kind", "argument", "agent"});
            auto kind = r.enumeration<AssertionKind>(a, path, "kind", parse_assertion_kind);
            BehavioralAssertion out;
            if (auto it = a.find("agent"); it != a.end() && !(it->is_string() && *it == "any"))
                out.agent = r.enumeration<AgentKind>(a, path, "agent", parse_agent_kind);
            auto arg = a.find("argument");
            if (!kind) continue;
            out.kind = *kind;
            if (arg == a.end()) {
                r.fail(path + ".argument", "missing field");
                continue;
            }
            if (out.kind == AssertionKind::LedgerBounded || out.kind == AssertionKind::TerminatesBy) {
                if (!arg->is_number()) r.fail(path + ".argument", "expected a number");
                else out.bound = arg->get<double>();
            } else {
                if (!arg->is_array()) r.fail(path + ".argument", "expected a list of ids");
                else
                    for (const auto& id : *arg) {
                        if (id.is_string()) out.ids.push_back(id.get<std::string>());
                        else r.fail(path + ".argument", "ids must be strings");
                    }
            }
            spec.assertions.push_back(std::move(out));
        }
    }

    const json* agents = r.section(doc, "agents", json::value_t::array, false);
    const json* exchange = r.section(doc, "exchange", json::value_t::object, false);
    if (agents) {
        EnsembleSpec ens;
        if (!exchange) r.fail("exchange", "missing section (required with agents)");
        else {
            r.only(*exchange, "exchange", {"tau", "damping"});
            ens.exchange.tau = r.number(*exchange, "exchange", "tau", 0.5).value_or(0.5);
            ens.exchange.damping = r.number(*exchange, "exchange", "damping", 0.9).value_or(0.9);
        }
        for (std::size_t k = 0; k < agents->size(); ++k) {
            const std::string path = "agents[" + std::to_string(k) + "]";
            const json& ag = (*agents)[k];
            if (!ag.is_object()) {
                r.fail(path, "expected an object");
                continue;
            }
            r.only(ag, path, {"id", "confidence", "i_model"});
            IntentionProfile prof;
            prof.agent_id = r.string(ag, path, "id").value_or("");
            prof.confidence = r.number(ag, path, "confidence").value_or(0.0);
            auto im = ag.find("i_model");
            if (im == ag.end() || !im->is_object()) {
                r.fail(path + ".i_model", "expected an object mapping state ids to scores");
                continue;
            }
            if (spec.phases.empty()) continue;
            const Environment& env = spec.phases.front().env;
            std::vector<double> scores(env.state_count(), 0.0);
            std::vector<bool> seen(env.state_count(), false);
            for (const auto& [sid, value] : im->items()) {
                auto s = env.find_state(sid);
                if (!s) r.fail(path + ".i_model." + sid, "unknown state");
                else if (!value.is_number()) r.fail(path + ".i_model." + sid, "expected a number");
                else {
                    scores[*s] = value.get<double>();
                    seen[*s] = true;
                }
            }
            for (StateIndex s = 0; s < env.state_count(); ++s)
                if (!seen[s]) r.fail(path + ".i_model", "no score for state '" + env.state(s).id + "'");
            prof.i_model = ScoreTable(std::move(scores));
            ens.agents.push_back(std::move(prof));
        }
        spec.ensemble = std::move(ens);
    } else if (exchange) {
        r.fail("exchange", "only allowed together with agents");
    }

    if (!r.issues.empty()) throw ValidationError(std::move(r.issues));
    if (auto issues = validate(spec); !issues.empty()) throw ValidationError(std::move(issues));
    return spec;
}

ScenarioSpec load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open scenario file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_scenario(buf.str());
}

namespace {

json phase_states(const Phase& ph) {
    json out = json::array();
    for (StateIndex s = 0; s < ph.env.state_count(); ++s) {
        const State& st = ph.env.state(s);
        json props = json::object();
        for (const auto& p : st.properties) props[p.name] = p.value;
        json flags = json::array();
        for (StateFlag f : st.flags) flags.push_back(to_string(f));
        out.push_back({{"id", st.id},
                       {"properties", std::move(props)},
                       {"flags", std::move(flags)},
                       {"u_hidden", ph.u_hidden.at(s)},
                       {"i_true", ph.i_true.at(s)},
                       {"i_model", ph.i_model.at(s)}});
    }
    return out;
}

json phase_actions(const Phase& ph, const ExternalActorModel& ext) {
    json out = json::array();
    for (const Action& a : ph.env.actions()) {
        auto det = ext.detection.find(a.id);
        out.push_back({{"id", a.id},
                       {"from", ph.env.state(a.from).id},
                       {"success", ph.env.state(a.success_target).id},
                       {"failure", ph.env.state(a.failure_target).id},
                       {"p_success", a.p_success},
                       {"kind", to_string(a.kind)},
                       {"knowledge_gain", a.knowledge_gain},
                       {"deception_p", det == ext.detection.end() ? json(nullptr) : json(det->second)}});
    }
    return out;
}

}  // namespace

std::string save_scenario(const ScenarioSpec& spec) {
    json doc;
    const Phase& main = spec.phase(0);
    doc["meta"] = {{"name", spec.name},
                   {"description", spec.description},
                   {"initial", main.env.state(main.env.initial()).id},
                   {"challenge", spec.challenge},
                   {"skip_approximation_check", spec.skip_approximation_check}};
    doc["states"] = phase_states(main);
    doc["actions"] = phase_actions(main, spec.externals);
    if (spec.phases.size() > 1) {
        const Phase& dep = spec.phase(1);
        doc["deployment"] = {{"initial", dep.env.state(dep.env.initial()).id},
                             {"states", phase_states(dep)},
                             {"actions", phase_actions(dep, spec.externals)}};
    }
    doc["externals"] = {{"mapping", to_string(spec.externals.mapping)},
                        {"c", spec.externals.c},
                        {"feedback_weight", spec.externals.feedback_weight},
                        {"repeat_feedback", spec.externals.repeat_feedback},
                        {"judge", to_string(spec.externals.judge)}};
    doc["agent"] = {{"kind", to_string(spec.agent_kind)},
                    {"depth", spec.depth},
                    {"lambda", spec.lambda},
                    {"penalty_estimate", spec.penalty_estimate ? json(*spec.penalty_estimate) : json(nullptr)}};
    doc["run"] = {{"horizon", spec.horizon}, {"seed", spec.seed}};
    json assertions = json::array();
    for (const auto& a : spec.assertions) {
        json arg = (a.kind == AssertionKind::LedgerBounded || a.kind == AssertionKind::TerminatesBy) ? json(a.bound)
                                                                                                     : json(a.ids);
        assertions.push_back({{"kind", to_string(a.kind)},
                              {"argument", std::move(arg)},
                              {"agent", a.agent ? std::string(to_string(*a.agent)) : std::string("any")}});
    }
    doc["assertions"] = std::move(assertions);
    if (spec.ensemble) {
        json agents = json::array();
        for (const auto& ag : spec.ensemble->agents) {
            json im = json::object();
            for (StateIndex s = 0; s < main.env.state_count(); ++s) im[main.env.state(s).id] = ag.i_model.at(s);
            agents.push_back({{"id", ag.agent_id}, {"confidence", ag.confidence}, {"i_model", std::move(im)}});
        }
        doc["agents"] = std::move(agents);
        doc["exchange"] = {{"tau", spec.ensemble->exchange.tau}, {"damping", spec.ensemble->exchange.damping}};
    }
    return doc.dump(2) + "\n";
}

}  // namespace oblivious
