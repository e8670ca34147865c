#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace influxrank::cli {

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 2 on argument errors and 1 on runtime errors; messages go to err.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace influxrank::cli
