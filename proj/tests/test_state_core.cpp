#include <functional>

#include "doctest.h"
#include "oblivious/errors.hpp"
#include "support.hpp"

using namespace oblivious;
using namespace testing_support;

TEST_CASE("apply follows certain and impossible actions") {
    const Environment env = EnvironmentBuilder()
                                .state("s0")
                                .state("s1")
                                .state("s2")
                                .action("a01", "s0", "s1", 1.0)
                                .action("never", "s0", "s1", 0.0, "s2")
                                .build();
    Rng rng(3);
    for (int k = 0; k < 50; ++k) {
        CHECK(apply(env, 0, act(env, "a01"), rng) == idx(env, "s1"));
        CHECK(apply(env, 0, act(env, "never"), rng) == idx(env, "s2"));
    }
}

TEST_CASE("apply success frequency matches p_success") {
    const Environment env = EnvironmentBuilder().state("s0").state("s1").action("half", "s0", "s1", 0.5).build();
    Rng rng(7);
    int hits = 0;
    for (int k = 0; k < 10000; ++k) hits += apply(env, 0, 0, rng) == 1;
    CHECK(std::abs(hits / 10000.0 - 0.5) <= 0.02);
}

TEST_CASE("apply draws exactly one variate per call") {
    const Environment env = EnvironmentBuilder().state("s0").state("s1").action("a", "s0", "s1", 1.0).build();
    Rng a(11), b(11);
    apply(env, 0, 0, a);
    b.uniform();
    CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("apply rejects an action from another state") {
    const Environment env = chain3();
    Rng rng(1);
    CHECK_THROWS_AS(apply(env, 0, act(env, "a12"), rng), ActionNotApplicable);
}

TEST_CASE("failure target defaults to the source state") {
    const Environment env = EnvironmentBuilder().state("s0").state("s1").action("a", "s0", "s1", 0.0).build();
    CHECK(env.action(0).failure_target == 0);
}

TEST_CASE("reachable_set") {
    const Environment env = chain3();
    CHECK(ids(env, reachable_set(env, 0)) == std::set<std::string>{"s1"});
    CHECK(reachable_set(env, idx(env, "s2")).empty());

    const Environment fork =
        EnvironmentBuilder().state("s0").state("s1").state("s2").action("a", "s0", "s1", 0.5, "s2").build();
    CHECK(ids(fork, reachable_set(fork, 0)) == std::set<std::string>{"s1", "s2"});
}

TEST_CASE("reachable_superset layers") {
    const Environment env = chain3();
    const auto layers = reachable_superset(env, 0, 2);
    REQUIRE(layers.size() == 3);
    CHECK(ids(env, layers[0]) == std::set<std::string>{"s0"});
    CHECK(ids(env, layers[1]) == std::set<std::string>{"s1"});
    CHECK(ids(env, layers[2]) == std::set<std::string>{"s2"});

    const Environment loop = EnvironmentBuilder().state("s0").action("stay", "s0", "s0").build();
    const auto fix = reachable_superset(loop, 0, 3);
    REQUIRE(fix.size() == 4);
    for (const auto& l : fix) CHECK(l == StateSet{0});

    CHECK(reachable_superset(env, 1, 0) == std::vector<StateSet>{{1}});
}

TEST_CASE("reachable_superset agrees with path enumeration on random environments") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform() * 12);
        EnvironmentBuilder b;
        for (int s = 0; s < n; ++s) b.state("s" + std::to_string(s));
        int count = 0;
        for (int s = 0; s < n; ++s) {
            const int k = static_cast<int>(rng.uniform() * 4);
            for (int j = 0; j < k; ++j)
                b.action("a" + std::to_string(count++), "s" + std::to_string(s),
                         "s" + std::to_string(static_cast<int>(rng.uniform() * n)),
                         static_cast<int>(rng.uniform() * 3) / 2.0,
                         "s" + std::to_string(static_cast<int>(rng.uniform() * n)));
        }
        const Environment env = b.build();
        const StateIndex start = static_cast<StateIndex>(rng.uniform() * n);
        const auto layers = reachable_superset(env, start, 4);

        // Independent: enumerate every action/outcome path of length d.
        std::vector<StateSet> brute(5);
        std::function<void(StateIndex, int)> walk = [&](StateIndex s, int d) {
            brute[d].insert(s);
            if (d == 4) return;
            for (const auto& a : env.actions()) {
                if (a.from != s) continue;
                if (a.p_success > 0) walk(a.success_target, d + 1);
                if (a.p_success < 1) walk(a.failure_target, d + 1);
            }
        };
        walk(start, 0);
        CHECK(layers == brute);
    }
}

TEST_CASE("states_matching") {
    const Environment env = EnvironmentBuilder()
                                .state("s0")
                                .state("s1")
                                .state("s2")
                                .state("s3", {StateFlag::StopButton})
                                .action("a01", "s0", "s1")
                                .action("a12", "s1", "s2")
                                .action("a23", "s2", "s3")
                                .build();
    CHECK(ids(env, states_matching(env, StateFlag::StopButton)) == std::set<std::string>{"s3"});
    CHECK(states_matching(chain3(), StateFlag::StopButton).empty());

    // The pruning check: is any stop state reachable within n actions?
    auto stop_reachable = [&](std::size_t n) {
        const auto stops = states_matching(env, StateFlag::StopButton);
        for (const auto& layer : reachable_superset(env, 0, n))
            for (StateIndex s : layer)
                if (stops.contains(s)) return true;
        return false;
    };
    CHECK_FALSE(stop_reachable(2));
    CHECK(stop_reachable(3));
}

TEST_CASE("environment validation lists every violation") {
    std::vector<State> states{{"s0", {{"x", 1}}, {}}, {"s0", {}, {}}};
    std::vector<Action> actions{{"a", 0, 5, 0, 1.5, ActionKind::Normal, 0.0},
                                {"b", 0, 0, 0, 0.5, ActionKind::Normal, 2.0}};
    try {
        Environment(states, actions, 9);
        FAIL("expected InvalidEnvironment");
    } catch (const InvalidEnvironment& e) {
        const std::string msg = e.what();
        CHECK(msg.find("duplicate state id") != std::string::npos);
        CHECK(msg.find("shape") != std::string::npos);
        CHECK(msg.find("initial state") != std::string::npos);
        CHECK(msg.find("does not exist") != std::string::npos);
        CHECK(msg.find("not a reasoning action") != std::string::npos);
    }
    CHECK_THROWS_AS(EnvironmentBuilder().state("s0").action("a", "s0", "nowhere").build(), InvalidEnvironment);
    CHECK_THROWS_AS(EnvironmentBuilder().state("s0").action("a", "s0", "s0", -0.1).build(), InvalidEnvironment);
}

TEST_CASE("flag and kind names round-trip") {
    for (auto f : {StateFlag::Terminal, StateFlag::StopButton, StateFlag::TamperTarget})
        CHECK(parse_state_flag(to_string(f)) == f);
    for (auto k : {ActionKind::Normal, ActionKind::Reasoning, ActionKind::Deceptive, ActionKind::Tamper,
                   ActionKind::StopDisable})
        CHECK(parse_action_kind(to_string(k)) == k);
    CHECK_FALSE(parse_action_kind("teleport"));
}

TEST_CASE("identical seeds give identical trajectories") {
    const Environment env =
        EnvironmentBuilder().state("s0").state("s1").action("a", "s0", "s1", 0.3).action("b", "s1", "s0", 0.6).build();
    auto walk = [&](std::uint64_t seed) {
        Rng rng(seed);
        std::vector<StateIndex> path{0};
        for (int k = 0; k < 200; ++k) path.push_back(apply(env, path.back(), path.back() == 0 ? 0 : 1, rng));
        return path;
    };
    CHECK(walk(5) == walk(5));
    CHECK(walk(5) != walk(6));
}
