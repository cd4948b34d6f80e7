#pragma once

#include <ostream>

namespace pgcn {

// Runs the invariant suite (gradient checks, algebraic equivalences, oracle
// comparisons, determinism) printing one line per check.  Returns true when
// every check passes.
bool run_verification(std::ostream& out);

}  // namespace pgcn
