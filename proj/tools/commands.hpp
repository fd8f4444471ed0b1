#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace attnshape::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2 };

// `args` excludes the program name. Diagnostics go to `err` only.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace attnshape::cli
