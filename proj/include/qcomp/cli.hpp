#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qcomp {

/// Runs one pipeline subcommand. args excludes the program name. Returns 0 on
/// success, 2 on a usage or configuration error, 1 on a runtime failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qcomp
