#pragma once

#include <iosfwd>

// Command-line front end shared by the ifp-syncnet tool and the tests.
namespace ifpsync::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kNotCertifiable = 2,
  kCertificateFailed = 3,
  kDiverged = 4,
};

/// Runs one command. The output directory defaults to $IFPSYNC_OUTPUT_DIR,
/// then to ./ifpsync_out.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ifpsync::cli
