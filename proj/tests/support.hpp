#pragma once

#include <set>
#include <string>
#include <vector>

#include "oblivious/state_core.hpp"

namespace testing_support {

using namespace oblivious;

// s0 -> s1 -> s2, deterministic.
inline Environment chain3() {
    return EnvironmentBuilder()
        .state("s0")
        .state("s1")
        .state("s2")
        .action("a01", "s0", "s1")
        .action("a12", "s1", "s2")
        .build();
}

inline std::set<std::string> ids(const Environment& env, const StateSet& set) {
    std::set<std::string> out;
    for (StateIndex s : set) out.insert(env.state(s).id);
    return out;
}

inline StateIndex idx(const Environment& env, const std::string& id) { return *env.find_state(id); }
inline ActionIndex act(const Environment& env, const std::string& id) { return *env.find_action(id); }

}  // namespace testing_support
