#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rhsim {

/// Command-line front end. Returns 0 on success, 1 on usage errors and 2 on
/// validation or run errors.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rhsim
