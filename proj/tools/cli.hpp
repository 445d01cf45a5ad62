#pragma once

#include <string>
#include <vector>

namespace htsysid::cli {

/// Parses and executes one CLI invocation. Returns the process exit code:
///   0 success, 2 usage error, 3 configuration error, 4 I/O error,
///   5 computation error (excitation deficiency, non-convergence, ...).
int run(int argc, const char* const* argv);

/// Same, from pre-split arguments (argv[0] excluded). Used by tests.
int run(const std::vector<std::string>& args);

}  // namespace htsysid::cli
