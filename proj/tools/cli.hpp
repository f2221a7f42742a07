#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tvspec::cli {

/// Parses and runs one command line (args excludes the program name).
/// Returns 0 on success, 1 on usage errors, 2 on runtime failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tvspec::cli
