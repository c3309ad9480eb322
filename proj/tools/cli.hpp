#pragma once

#include <ostream>

namespace attsync::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
    kOk = 0,
    kConfigError = 1,
    kNotConverged = 2,  ///< also: infeasible parameters, failed gradient check
    kCertificate = 3,
};

/// attsync simulate | check-params | montecarlo | gradcheck
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace attsync::cli
