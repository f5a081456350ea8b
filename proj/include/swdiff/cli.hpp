#pragma once

#include <string>
#include <vector>

namespace swdiff::cli {

/// Exit codes: 0 success, 1 acceptance-check failure (--check), 2 usage or
/// config error, 3 divergence-dominated run (> 1% aborted paths).
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace swdiff::cli
