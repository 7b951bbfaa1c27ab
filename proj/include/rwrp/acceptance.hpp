#pragma once

namespace rwrp {

// The 14-criterion verification gate.  Prints exactly one PASS/FAIL line per
// criterion (fixtures and tolerances are pinned in the implementation) and
// returns the number of failures.
int run_acceptance();

}  // namespace rwrp
