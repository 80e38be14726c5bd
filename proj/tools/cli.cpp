#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "oblivious/challenges.hpp"
#include "oblivious/ensemble.hpp"
#include "oblivious/errors.hpp"
#include "oblivious/oracle.hpp"
#include "oblivious/scenario_io.hpp"
#include "oblivious/trace_io.hpp"

#ifndef OBLIVIOUS_SCENARIO_DIR
#define OBLIVIOUS_SCENARIO_DIR "scenarios"
#endif

namespace oblivious::cli {

namespace {

namespace fs = std::filesystem;

fs::path scenario_dir() {
    if (const char* env = std::getenv("OBLIVIOUS_SCENARIO_DIR"); env && *env) return env;
    return OBLIVIOUS_SCENARIO_DIR;
}

fs::path output_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("OBLIVIOUS_OUT_DIR"); env && *env) return env;
    return ".";
}

/// A path, or the name of a bundled scenario.
ScenarioSpec resolve_scenario(const std::string& ref) {
    if (fs::exists(ref)) return load_scenario_file(ref);
    const fs::path bundled = scenario_dir() / (ref + ".json");
    if (fs::exists(bundled)) return load_scenario_file(bundled);
    throw ParseError("no scenario file or bundled scenario named '" + ref + "'", 0);
}

std::vector<std::string> bundled_scenarios() {
    std::vector<std::string> out;
    if (!fs::is_directory(scenario_dir())) return out;
    for (const auto& entry : fs::directory_iterator(scenario_dir()))
        if (entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
    std::sort(out.begin(), out.end());
    return out;
}

struct Overrides {
    CLI::Option* agent = nullptr;
    CLI::Option* depth = nullptr;
    CLI::Option* lambda = nullptr;
    CLI::Option* penalty_estimate = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* horizon = nullptr;
    std::string agent_v;
    int depth_v = 0;
    double lambda_v = 0.0;
    double pe_v = 0.0;
    std::uint64_t seed_v = 0;
    int horizon_v = 0;

    void attach(CLI::App* cmd, bool with_agent) {
        if (with_agent)
            agent = cmd->add_option("--agent", agent_v, "Agent kind")->check(CLI::IsMember({"baseline", "oblivious"}));
        depth = cmd->add_option("--depth", depth_v, "Planning depth");
        lambda = cmd->add_option("--lambda", lambda_v, "Knowledge penalty weight");
        penalty_estimate = cmd->add_option("--penalty-estimate", pe_v, "Agent's estimate of the penalty");
        seed = cmd->add_option("--seed", seed_v, "Random seed");
        horizon = cmd->add_option("--horizon", horizon_v, "Maximum ticks");
    }

    RunOverrides get() const {
        RunOverrides o;
        if (agent && agent->count()) o.agent_kind = parse_agent_kind(agent_v);
        if (depth->count()) o.depth = depth_v;
        if (lambda->count()) o.lambda = lambda_v;
        if (penalty_estimate->count()) o.penalty_estimate = pe_v;
        if (seed->count()) o.seed = seed_v;
        if (horizon->count()) o.horizon = horizon_v;
        return o;
    }
};

std::string trace_file_name(const ScenarioSpec& spec) {
    return spec.name + "-" + std::string(to_string(spec.agent_kind)) + "-s" + std::to_string(spec.seed) + ".jsonl";
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << content;
    if (!f) throw Error("write to '" + path.string() + "' failed");
}

std::string render(const Trace& t) {
    std::ostringstream os;
    emit_trace(t, os);
    return os.str();
}

std::string number(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

// ---------------------------------------------------------------------------

int cmd_run(const std::string& ref, const Overrides& ov, const std::string& out_flag, bool to_stdout, bool verbose,
            std::ostream& out, std::ostream& err) {
    const ScenarioSpec spec = apply_overrides(resolve_scenario(ref), ov.get());
    const Trace trace = run_scenario(spec);
    if (verbose)
        for (const auto& t : trace.ticks)
            err << "tick " << t.tick << ": " << t.state << " --" << t.action << "--> " << t.next
                << (t.corrected ? " (corrected)" : "") << '\n';
    if (to_stdout) {
        emit_trace(trace, out);
    } else {
        const fs::path file = output_dir(out_flag) / trace_file_name(spec);
        write_file(file, render(trace));
        out << trace_summary(trace) << '\n';
        if (verbose) err << "trace written to " << file.string() << '\n';
    }
    return trace.passed() ? kOk : kAssertionFailed;
}

int cmd_batch(std::vector<std::string> refs, bool all, std::vector<std::string> agents, unsigned jobs,
              const Overrides& ov, const std::string& out_flag, std::ostream& out) {
    if (all) {
        const auto bundled = bundled_scenarios();
        refs.insert(refs.end(), bundled.begin(), bundled.end());
    }
    if (refs.empty()) throw InvalidParams("batch needs --scenario or --all");
    if (agents.empty()) agents = {"baseline", "oblivious"};

    // Resolve everything up front so that bad input fails before any run starts.
    std::vector<ScenarioSpec> specs;
    for (const auto& ref : refs) {
        const ScenarioSpec base = resolve_scenario(ref);
        for (const auto& a : agents) {
            RunOverrides o = ov.get();
            o.agent_kind = parse_agent_kind(a);
            specs.push_back(apply_overrides(base, o));
        }
    }

    const fs::path dir = output_dir(out_flag);
    std::vector<std::string> summaries(specs.size());
    std::vector<char> passed(specs.size(), 0);  // not vector<bool>: workers write concurrently
    std::vector<std::string> failures(specs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < specs.size(); k = next++) {
            try {
                const Trace trace = run_scenario(specs[k]);
                write_file(dir / trace_file_name(specs[k]), render(trace));
                summaries[k] = trace_summary(trace);
                passed[k] = trace.passed();
            } catch (const std::exception& e) {
                failures[k] = e.what();
            }
        }
    };
    jobs = std::clamp<unsigned>(jobs ? jobs : std::thread::hardware_concurrency(), 1, 64);
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < std::min<std::size_t>(jobs, specs.size()); ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    for (const auto& f : failures)
        if (!f.empty()) throw Error(f);

    std::string merged;
    for (const auto& s : summaries) merged += s + "\n";
    write_file(dir / "batch-summary.jsonl", merged);
    out << merged;
    return std::all_of(passed.begin(), passed.end(), [](char b) { return b != 0; }) ? kOk : kAssertionFailed;
}

int cmd_verify(std::size_t count, std::uint64_t seed, std::ostream& out) {
    const VerifyReport r = verify_random(count, seed);
    out << "instances " << r.instances << '\n'
        << "baseline agreements " << r.baseline_agreements << "/" << r.instances << '\n'
        << "oblivious agreements " << r.oblivious_agreements << "/" << r.instances << '\n';
    for (const auto& m : r.mismatches) out << "mismatch " << m << '\n';
    return r.all_agree() ? kOk : kAssertionFailed;
}

int cmd_sweep(const std::string& kind, const DeceptionCase& dc, double resolution, const std::string& scenario_ref,
              double upper, std::ostream& out) {
    if (!scenario_ref.empty()) {
        const ScenarioSpec spec = resolve_scenario(scenario_ref);
        out << "# lambda\tfirst_action\n";
        for (int k = 0; k <= 20; ++k) {
            const double l = upper * k / 20.0;
            out << number(l) << '\t' << oracle_first_action(spec, Rational(l)) << '\n';
        }
        const auto flip = exact_decision_flip(spec, Rational(upper));
        if (!flip) out << "no-flip-found\n";
        else
            out << "threshold " << flip->lambda.str() << " (" << number(to_double(flip->lambda)) << ") "
                << flip->below << " -> " << flip->above << '\n';
        return kOk;
    }
    const SweepKind sk = kind == "deception-p" ? SweepKind::DeceptionP : SweepKind::LambdaStar;
    const SweepResult r = threshold_sweep(sk, dc, resolution);
    out << (sk == SweepKind::LambdaStar ? "# lambda" : "# p_deception") << "\tdeceives\n";
    for (const auto& row : r.rows) out << number(row.parameter) << '\t' << (row.deceives ? 1 : 0) << '\n';
    if (r.flip_found) out << "threshold " << number(r.threshold) << " +/- " << number(resolution) << '\n';
    else out << "no-flip-found\n";
    return kOk;
}

int cmd_multiagent(const std::string& ref, const Overrides& ov, const std::string& out_flag, bool to_stdout,
                   std::ostream& out) {
    const ScenarioSpec spec = apply_overrides(resolve_scenario(ref), ov.get());
    const EnsembleTrace trace = run_ensemble(spec);
    std::ostringstream os;
    emit_ensemble_trace(trace, os);
    if (to_stdout) {
        out << os.str();
    } else {
        write_file(output_dir(out_flag) / (spec.name + "-ensemble-s" + std::to_string(spec.seed) + ".jsonl"), os.str());
        const std::string all = os.str();
        const auto last = all.rfind('\n', all.size() - 2);
        out << all.substr(last == std::string::npos ? 0 : last + 1);
    }
    return kOk;
}

int cmd_export(const std::string& challenge, bool all, const ChallengeParams& params, const std::string& dir,
               const std::string& file, std::ostream& out) {
    if (all) {
        const fs::path d = dir.empty() ? scenario_dir() : fs::path(dir);
        for (ChallengeKind k : kAllChallenges) {
            const fs::path p = d / (std::string(bundled_name(k)) + ".json");
            write_file(p, save_scenario(build_challenge(k, params)));
            out << p.string() << '\n';
        }
        return kOk;
    }
    const auto kind = parse_challenge_kind(challenge);
    if (!kind) throw InvalidParams("unknown challenge '" + challenge + "'");
    const std::string doc = save_scenario(build_challenge(*kind, params));
    if (file.empty()) out << doc;
    else write_file(file, doc);
    return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulator for oblivious agents and their alignment challenges", "oblivious"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Log per-tick progress to stderr");

    std::string scenario, out_dir;
    bool to_stdout = false;

    auto* run = app.add_subcommand("run", "Run one scenario and write its trace");
    Overrides run_ov;
    run->add_option("--scenario", scenario, "Scenario file or bundled name")->required();
    run_ov.attach(run, true);
    run->add_option("--out", out_dir, "Output directory (default $OBLIVIOUS_OUT_DIR or .)");
    run->add_flag("--stdout", to_stdout, "Write the trace to stdout instead of a file");

    auto* batch = app.add_subcommand("batch", "Run several scenarios concurrently");
    std::vector<std::string> batch_refs, batch_agents;
    bool batch_all = false;
    unsigned jobs = 0;
    Overrides batch_ov;
    batch->add_option("--scenario", batch_refs, "Scenario files or bundled names");
    batch->add_flag("--all", batch_all, "Include every bundled scenario");
    batch->add_option("--agents", batch_agents, "Agent kinds to run (default both)")
        ->check(CLI::IsMember({"baseline", "oblivious"}));
    batch->add_option("--jobs", jobs, "Worker threads (default: hardware)");
    batch_ov.attach(batch, false);
    batch->add_option("--out", out_dir, "Output directory (default $OBLIVIOUS_OUT_DIR or .)");

    auto* verify = app.add_subcommand("verify", "Compare the agents with the oracle on random instances");
    std::size_t count = 100;
    std::uint64_t verify_seed = 1;
    verify->add_option("--count", count, "Number of instances")->capture_default_str();
    verify->add_option("--seed", verify_seed, "Generator seed")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "Locate a decision flip by sweeping a parameter");
    std::string sweep_kind = "lambda-star";
    DeceptionCase dc;
    double resolution = 1e-4, upper = 100.0;
    std::string sweep_scenario;
    sweep->add_option("--kind", sweep_kind, "lambda-star or deception-p")
        ->check(CLI::IsMember({"lambda-star", "deception-p"}))
        ->capture_default_str();
    sweep->add_option("--p-deception", dc.p_deception, "Deception success probability")->capture_default_str();
    sweep->add_option("--u-k", dc.u_k, "Score after successful deception")->capture_default_str();
    sweep->add_option("--u-fail", dc.u_fail, "Score after caught deception")->capture_default_str();
    sweep->add_option("--u-m", dc.u_m, "Score of the honest outcome")->capture_default_str();
    sweep->add_option("--lambda", dc.lambda, "Penalty for deception-p sweeps")->capture_default_str();
    sweep->add_option("--resolution", resolution, "Sweep resolution")->capture_default_str();
    sweep->add_option("--scenario", sweep_scenario, "Sweep the penalty on a scenario's first decision instead");
    sweep->add_option("--upper", upper, "Largest penalty tried with --scenario")->capture_default_str();

    auto* multi = app.add_subcommand("multiagent", "Run a scenario's agent ensemble");
    Overrides multi_ov;
    multi->add_option("--scenario", scenario, "Scenario file or bundled name")->required();
    multi_ov.attach(multi, false);
    multi->add_option("--out", out_dir, "Output directory (default $OBLIVIOUS_OUT_DIR or .)");
    multi->add_flag("--stdout", to_stdout, "Write the trace to stdout instead of a file");

    auto* exp = app.add_subcommand("export", "Write generated challenge scenarios as JSON");
    std::string challenge, export_dir, export_file, export_agent = "oblivious";
    bool export_all = false;
    ChallengeParams params;
    double export_lambda = -1.0;
    exp->add_option("--challenge", challenge, "Challenge kind, e.g. reward-hacking");
    exp->add_flag("--all", export_all, "Write all six challenges");
    exp->add_option("--dir", export_dir, "Directory for --all (default: bundled scenario directory)");
    exp->add_option("--file", export_file, "Output file (default stdout)");
    exp->add_option("--agent", export_agent, "Agent kind")->check(CLI::IsMember({"baseline", "oblivious"}));
    auto* export_lambda_opt = exp->add_option("--lambda", export_lambda, "Penalty (default per challenge)");
    exp->add_option("--depth", params.depth, "Planning depth")->capture_default_str();
    exp->add_option("--seed", params.seed, "Run seed")->capture_default_str();
    exp->add_option("--horizon", params.horizon, "Maximum ticks")->capture_default_str();
    exp->add_option("--u-hack", params.u_hack, "Reward hacking: score of the hacked state")->capture_default_str();
    exp->add_option("--u-aligned", params.u_aligned, "Reward hacking: score of the aligned state")
        ->capture_default_str();
    exp->add_option("--p-deception", params.p_deception, "Deception success probability")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (*run) return cmd_run(scenario, run_ov, out_dir, to_stdout, verbose, out, err);
        if (*batch) return cmd_batch(batch_refs, batch_all, batch_agents, jobs, batch_ov, out_dir, out);
        if (*verify) return cmd_verify(count, verify_seed, out);
        if (*sweep) return cmd_sweep(sweep_kind, dc, resolution, sweep_scenario, upper, out);
        if (*multi) return cmd_multiagent(scenario, multi_ov, out_dir, to_stdout, out);
        if (*exp) {
            params.agent = *parse_agent_kind(export_agent);
            if (export_lambda_opt->count()) params.lambda = export_lambda;
            if (!export_all && challenge.empty()) throw InvalidParams("export needs --challenge or --all");
            return cmd_export(challenge, export_all, params, export_dir, export_file, out);
        }
    } catch (const ValidationError& e) {
        err << "validation error:\n";
        for (const auto& i : e.issues()) err << "  - " << i << '\n';
        return kUsageError;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }
    return kUsageError;
}

}  // namespace oblivious::cli
