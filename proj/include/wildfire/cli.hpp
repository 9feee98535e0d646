#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wildfire {

// Runs one subcommand. Returns 0 on success, 1 on a validation or usage
// error, 2 on any other failure. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wildfire
