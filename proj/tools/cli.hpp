#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace locosel {

/// Entry point of `locosel_cli`. `args` excludes the program name.
/// Returns 0 on success, 2 on usage errors, 1 on any other failure; failures
/// print a one-line diagnostic to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace locosel
