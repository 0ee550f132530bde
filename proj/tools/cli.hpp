#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pm::cli {

/// Exit codes: 0 all checks pass, 1 usage or configuration error, 2 some
/// check failed.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pm::cli
