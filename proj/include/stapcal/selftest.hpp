#ifndef STAPCAL_SELFTEST_HPP
#define STAPCAL_SELFTEST_HPP

#include <ostream>

namespace stapcal {

// Runs the oracle-equivalence and invariant battery, printing one pass/fail
// line per property. Returns the number of failed properties.
int run_selftest(std::ostream& out);

}  // namespace stapcal

#endif
