#pragma once

#include <iosfwd>

namespace cfisac {

/// Quick oracle and property checks on small random instances. Prints one
/// PASS/FAIL line per check and returns true when all pass.
bool run_validation(std::ostream& os);

}  // namespace cfisac
