#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace commeval::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes: 0 success, 1 domain error, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace commeval::cli
