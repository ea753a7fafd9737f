#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cycleik {

/// Runs one of the subcommands gen-data, train, eval, solve, plan, bench.
/// Returns 0 on success, 1 on usage errors, 2 on runtime failures.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cycleik
