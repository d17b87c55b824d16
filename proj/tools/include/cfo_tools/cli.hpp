#pragma once

#include <iosfwd>

namespace cfo::tools {

/// Entry point of the `cfo` command. Returns 0 on success, 1 on runtime or IO
/// failure and 2 on usage errors; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cfo::tools
