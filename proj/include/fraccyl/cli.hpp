#pragma once

namespace fraccyl {

/// Batch front end. Exit codes: 0 success/pass, 1 configuration or solver
/// error, 2 scientific check failure.
int cli_main(int argc, const char* const* argv);

}  // namespace fraccyl
