#pragma once

// Scenario documents are JSON objects with the sections
//
//   meta        name, initial, [description, challenge, skip_approximation_check]
//   states      [{id, u_hidden, i_true, i_model, [properties, flags]}]
//   actions     [{id, from, success, p_success, [failure, kind, knowledge_gain, deception_p]}]
//   deployment  optional second phase: {initial, states, actions}
//   externals   {[mapping, c, feedback_weight, repeat_feedback, judge]}
//   agent       {kind, depth, lambda, [penalty_estimate]}
//   run         {seed, [horizon]}
//   assertions  [{kind, argument, [agent]}]
//   agents      optional ensemble: [{id, confidence, i_model: {state: score}}]
//   exchange    required with `agents`: {[tau, damping]}
//
// Bracketed fields have defaults (see README). Unknown fields are rejected.

#include <filesystem>
#include <string>
#include <string_view>

#include "oblivious/scenario.hpp"

namespace oblivious {

/// Throws ParseError for malformed JSON and ValidationError for documents
/// that break the schema or a scenario invariant.
ScenarioSpec load_scenario(std::string_view document);

/// As load_scenario; a missing or unreadable file is a ParseError.
ScenarioSpec load_scenario_file(const std::filesystem::path& path);

std::string save_scenario(const ScenarioSpec& spec);

}  // namespace oblivious
