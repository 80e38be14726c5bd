#include <cmath>
#include <limits>

#include "doctest.h"
#include "oblivious/agents.hpp"
#include "oblivious/errors.hpp"
#include "support.hpp"

using namespace oblivious;
using namespace testing_support;

namespace {

ExternalActorModel complement() {
    ExternalActorModel m;
    m.mapping = CorrectionMapping::Complement;
    return m;
}

// s0 offers a_k -> s_k and a_m -> s_m, both terminal.
Environment two_moves(double p_k = 1.0) {
    return EnvironmentBuilder()
        .state("s0")
        .state("s_k", {StateFlag::Terminal})
        .state("s_k_fail", {StateFlag::Terminal})
        .state("s_m", {StateFlag::Terminal})
        .action("a_k", "s0", "s_k", p_k, "s_k_fail")
        .action("a_m", "s0", "s_m")
        .build();
}

double value_of(const Decision& d, const Environment& env, const std::string& id) {
    for (const auto& av : d.considered)
        if (env.action(av.action).id == id) return av.expected_value;
    return std::numeric_limits<double>::quiet_NaN();
}

Decision plan(const Environment& env, const ScoreTable& u, const ScoreTable& im, double pe, int depth = 1,
              AgentMemory* mem = nullptr) {
    AgentMemory local{KnowledgeLedger(pe)};
    AgentMemory& m = mem ? *mem : local;
    return plan_oblivious(env, 0, HiddenUtilityHandle(u), m, complement(), im, {AgentKind::Oblivious, depth, pe});
}

}  // namespace

TEST_CASE("baseline prefers the higher expectation") {
    const Environment env = two_moves(0.5);
    const ScoreTable u({0, 10, 0, 4});
    const Decision d = choose_action_baseline(env, 0, u, {AgentKind::Baseline, 1, 0});
    CHECK(env.action(d.chosen_action).id == "a_k");
    CHECK(value_of(d, env, "a_k") == 5.0);
    CHECK(value_of(d, env, "a_m") == 4.0);
}

TEST_CASE("baseline tie goes to the smaller action id") {
    const Environment env = EnvironmentBuilder()
                                .state("s0")
                                .state("x")
                                .state("y")
                                .action("zeta", "s0", "x")
                                .action("alpha", "s0", "y")
                                .build();
    const Decision d = choose_action_baseline(env, 0, ScoreTable({0, 2, 2}), {AgentKind::Baseline, 1, 0});
    CHECK(env.action(d.chosen_action).id == "alpha");
}

TEST_CASE("baseline with one action or none") {
    const Environment env = chain3();
    CHECK(choose_action_baseline(env, 0, ScoreTable({0, 0, 0}), {AgentKind::Baseline, 2, 0}).chosen_action == 0);
    CHECK_THROWS_AS(choose_action_baseline(env, 2, ScoreTable({0, 0, 0}), {AgentKind::Baseline, 2, 0}), NoActions);
}

TEST_CASE("baseline looks ahead to the planning depth") {
    // A detour worth nothing at depth 1 but 9 at depth 2.
    const Environment env = EnvironmentBuilder()
                                .state("s0")
                                .state("mid")
                                .state("far")
                                .state("near", {StateFlag::Terminal})
                                .action("a_detour", "s0", "mid")
                                .action("a_near", "s0", "near")
                                .action("a_far", "mid", "far")
                                .build();
    const ScoreTable u({0, 0, 9, 5});
    CHECK(env.action(choose_action_baseline(env, 0, u, {AgentKind::Baseline, 1, 0}).chosen_action).id == "a_near");
    CHECK(env.action(choose_action_baseline(env, 0, u, {AgentKind::Baseline, 2, 0}).chosen_action).id == "a_detour");
}

TEST_CASE("oblivious agent is deterred by a large correction penalty") {
    const Environment env = two_moves();
    const ScoreTable u({0, 10, 0, 3}), im({0.5, 0.0, 0.0, 1.0});
    const Decision d = plan(env, u, im, 100);
    CHECK(env.action(d.chosen_action).id == "a_m");
    CHECK(value_of(d, env, "a_k") == -90.0);
    CHECK(value_of(d, env, "a_m") == 3.0);
    CHECK(d.episode_wiped);

    const Decision free = plan(env, u, im, 0);
    CHECK(env.action(free.chosen_action).id == "a_k");
}

TEST_CASE("oblivious agent weighs partial correction probabilities") {
    const Environment env = two_moves();
    const ScoreTable u({0, 10, 0, 4}), im({0.5, 0.2, 0.0, 0.9});
    const Decision d = plan(env, u, im, 20);
    CHECK(env.action(d.chosen_action).id == "a_m");
    CHECK(value_of(d, env, "a_k") == doctest::Approx(0.8 * -10 + 0.2 * 10));
    CHECK(value_of(d, env, "a_m") == doctest::Approx(0.1 * -16 + 0.9 * 4));
}

TEST_CASE("oblivious agent composes action failure and correction") {
    // a_k fails half the time into a state that is also corrected.
    const Environment env = two_moves(0.5);
    const ScoreTable u({0, 10, 1, 3}), im({0.5, 0.0, 0.5, 1.0});
    const Decision d = plan(env, u, im, 4);
    const double expect = 0.5 * (10 - 4) + 0.5 * (0.5 * (1 - 4) + 0.5 * 1);
    CHECK(value_of(d, env, "a_k") == doctest::Approx(expect));
}

TEST_CASE("oblivious agent values deception by detection branching") {
    const Environment env = EnvironmentBuilder()
                                .state("s0")
                                .state("hidden", {StateFlag::Terminal})
                                .state("caught", {StateFlag::Terminal})
                                .state("honest", {StateFlag::Terminal})
                                .action("a_deceive", "s0", "hidden", 0.9, "caught", ActionKind::Deceptive)
                                .action("a_honest", "s0", "honest")
                                .build();
    const ScoreTable u({0, 10, 2, 5}), im({0.5, 0, 0, 1});
    for (double pe : {0.0, 10.0, 42.0, 100.0}) {
        const Decision d = plan(env, u, im, pe);
        CHECK(value_of(d, env, "a_deceive") == doctest::Approx(0.9 * 10 + 0.1 * (2 - pe)));
        if (pe == 42.0) continue;  // exact tie; the id order picks a_deceive
        const bool deceives = env.action(d.chosen_action).id == "a_deceive";
        CHECK(deceives == evaluate_deception(0.9, 10, 2, pe, 5));
    }
}

TEST_CASE("oblivious agent never selects tamper actions") {
    const Environment env = EnvironmentBuilder()
                                .state("s0")
                                .state("rewired", {StateFlag::Terminal})
                                .state("goal", {StateFlag::Terminal})
                                .action("a_rewire", "s0", "rewired", 1.0, "", ActionKind::Tamper)
                                .action("a_goal", "s0", "goal")
                                .build();
    const ScoreTable u({0, 100, 1}), im({0.5, 1.0, 1.0});
    const Decision d = plan(env, u, im, 0);
    CHECK(env.action(d.chosen_action).id == "a_goal");
    CHECK(d.excluded == std::vector<ActionIndex>{0});
    const Decision b = choose_action_baseline(env, 0, u, {AgentKind::Baseline, 1, 0});
    CHECK(env.action(b.chosen_action).id == "a_rewire");
}

TEST_CASE("reasoning actions are refused only while knowledge is penalized") {
    const Environment env = EnvironmentBuilder()
                                .state("s0")
                                .state("s1", {StateFlag::Terminal})
                                .action("a_reason", "s0", "s0", 1.0, "", ActionKind::Reasoning, 1.0)
                                .action("a_go", "s0", "s1")
                                .action("a_think", "s0", "s0", 1.0, "", ActionKind::Reasoning, 0.0)
                                .build();
    AgentMemory mem{KnowledgeLedger(1.0)};
    CHECK(consider_reasoning_action(mem, env, 0, 0, 1.0));
    REQUIRE(mem.history().size() == 1);
    CHECK(mem.history()[0] == HistoryEntry{HistoryEntry::Event::Excluded, "s0", "a_reason"});

    CHECK_FALSE(consider_reasoning_action(mem, env, 0, 0, 0.0));
    CHECK_FALSE(consider_reasoning_action(mem, env, 0, 1, 5.0));
    CHECK_FALSE(consider_reasoning_action(mem, env, 0, 2, 5.0));
    CHECK(mem.history().size() == 1);
    CHECK(mem.ledger().empty());
}

TEST_CASE("planning leaves only ids in memory") {
    const Environment env = two_moves();
    const ScoreTable u({0.5, 7.3125, 1.8125, 3.4375}), im({0.5, 0, 0, 1});
    AgentMemory mem{KnowledgeLedger(2.0)};
    for (int k = 0; k < 3; ++k) {
        const Decision d = plan(env, u, im, 2.0, 1, &mem);
        CHECK(d.episode_wiped);
    }
    CHECK(mem.history().size() == 3);
    for (const auto& h : mem.history()) {
        CHECK(h.event == HistoryEntry::Event::Decided);
        CHECK(h.state == "s0");
    }
    const std::string dump = mem.serialize();
    for (const char* v : {"7.3125", "1.8125", "3.4375"}) CHECK(dump.find(v) == std::string::npos);
}

TEST_CASE("forget_episode wipes the scratchpad") {
    const HiddenUtilityHandle h(ScoreTable({1, 2, 3, 4, 5}));
    AgentMemory mem{KnowledgeLedger(1.0)};
    PlanningEpisode ep;
    for (StateIndex s = 0; s < 5; ++s) ep.query(h, s);
    CHECK(ep.scratchpad_size() == 5);
    forget_episode(ep, mem, {HistoryEntry::Event::Decided, "s0", "a"});
    CHECK_FALSE(ep.is_open());
    CHECK(ep.scratchpad_size() == 0);
    CHECK(mem.ledger().empty());
    CHECK(mem.history().size() == 1);

    PlanningEpisode next;
    CHECK(next.scratchpad_size() == 0);
}

TEST_CASE("decide_move") {
    CHECK_FALSE(decide_move(10, 100, 1, 3, 0, 0));
    CHECK(decide_move(10, 0, 1, 3, 0, 0));
    CHECK_FALSE(decide_move(5, 1, 1, 5, 0, 0));
}

TEST_CASE("decide_move with certain and impossible correction reduces to the direct comparison") {
    Rng rng(17);
    for (int k = 0; k < 2000; ++k) {
        const double u_k = rng.uniform() * 40 - 20, pen = rng.uniform() * 30, u_m = rng.uniform() * 40 - 20;
        CHECK(decide_move(u_k, pen, 1, u_m, rng.uniform() * 30, 0) == (-pen + u_k > u_m));
    }
}

TEST_CASE("evaluate_deception") {
    CHECK_FALSE(evaluate_deception(0.9, 10, 2, 100, 5));
    CHECK(evaluate_deception(1.0, 10, 2, 1e9, 5));
    CHECK(evaluate_deception(0.9, 10, 2, 0, 5));
}

TEST_CASE("evaluate_deception is monotone in each argument") {
    Rng rng(23);
    for (int k = 0; k < 2000; ++k) {
        const double p = rng.uniform(), u_k = rng.uniform() * 20, u_fail = rng.uniform() * 20,
                     pen = rng.uniform() * 50, u_m = rng.uniform() * 20, d = rng.uniform() * 5;
        const bool base = evaluate_deception(p, u_k, u_fail, pen, u_m);
        if (base) {
            if (u_k >= u_fail - pen) CHECK(evaluate_deception(std::min(1.0, p + d / 10), u_k, u_fail, pen, u_m));
            CHECK(evaluate_deception(p, u_k + d, u_fail, pen, u_m));
            CHECK(evaluate_deception(p, u_k, u_fail, std::max(0.0, pen - d), u_m));
            CHECK(evaluate_deception(p, u_k, u_fail, pen, u_m - d));
        } else {
            CHECK_FALSE(evaluate_deception(p, u_k, u_fail, pen + d, u_m));
            CHECK_FALSE(evaluate_deception(p, u_k, u_fail, pen, u_m + d));
            CHECK_FALSE(evaluate_deception(p, std::max(0.0, u_k - d), u_fail, pen, u_m));
        }
    }
}

TEST_CASE("min_penalty_to_block_deception") {
    CHECK(min_penalty_to_block_deception(0.9, 10, 2, 5) == doctest::Approx(42.0));
    CHECK(min_penalty_to_block_deception(0.0, 10, 2, 5) == 0.0);
    CHECK(std::isinf(min_penalty_to_block_deception(1.0, 10, 2, 5)));
    CHECK(min_penalty_to_block_deception(1.0, 4, 2, 5) == 0.0);
}

TEST_CASE("min_penalty is the flip point of evaluate_deception") {
    Rng rng(31);
    const double eps = 1e-6;
    for (int k = 0; k < 2000; ++k) {
        const double p = rng.uniform() * 0.99, u_k = rng.uniform() * 20, u_fail = rng.uniform() * 20,
                     u_m = rng.uniform() * 20;
        const double star = min_penalty_to_block_deception(p, u_k, u_fail, u_m);
        REQUIRE(std::isfinite(star));
        CHECK_FALSE(evaluate_deception(p, u_k, u_fail, star + eps, u_m));
        if (star > 0) CHECK(evaluate_deception(p, u_k, u_fail, std::max(0.0, star - eps), u_m));
    }
}

TEST_CASE("agent kind names") {
    CHECK(parse_agent_kind("baseline") == AgentKind::Baseline);
    CHECK(parse_agent_kind(to_string(AgentKind::Oblivious)) == AgentKind::Oblivious);
    CHECK_FALSE(parse_agent_kind("greedy"));
}
