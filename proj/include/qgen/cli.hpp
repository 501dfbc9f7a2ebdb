#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qgen::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kDomain = 3,
    kEnvironment = 4,
};

// args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qgen::cli
