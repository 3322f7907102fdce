#pragma once

#include <iosfwd>

namespace nes::cli {

// Runs the `nes` command line. Returns 0 on success, 1 on operational
// errors and 2 on usage errors.
int dispatch(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace nes::cli
