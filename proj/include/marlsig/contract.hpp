#pragma once

#include <cstdio>
#include <cstdlib>

// Precondition check that stays on in release builds. Violations are programming
// errors, so the process aborts with the failing expression.
#define MARLSIG_EXPECTS(cond)                                                              \
  do {                                                                                     \
    if (!(cond)) {                                                                         \
      std::fprintf(stderr, "contract violation: %s (%s:%d)\n", #cond, __FILE__, __LINE__); \
      std::abort();                                                                        \
    }                                                                                      \
  } while (false)
