#pragma once

// JSON Lines rendering of run traces: one object per tick, then a summary.
// Tick records carry the god's-eye value of u' at the next state for the
// reader's benefit; the agent itself never stores it.

#include <ostream>
#include <string>

#include "oblivious/ensemble.hpp"
#include "oblivious/scenario.hpp"

namespace oblivious {

void emit_trace(const Trace& trace, std::ostream& out);
void emit_ensemble_trace(const EnsembleTrace& trace, std::ostream& out);

/// The summary line alone, as emitted at the end of emit_trace.
std::string trace_summary(const Trace& trace);

}  // namespace oblivious
