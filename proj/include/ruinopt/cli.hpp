#pragma once

// Command-line front end. The whole surface lives in the library so tests can
// drive it in-process; the binary under tools/ is a thin wrapper.
//
// Subcommands: optimal, ruin, simulate, dominance, regimes.
// Exit codes: 0 success, 2 validation failure, 3 numerical non-convergence
// (a partial report is still emitted).

#include <ostream>
#include <string>
#include <vector>

namespace ruinopt::cli {

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ruinopt::cli
