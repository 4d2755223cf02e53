#pragma once

#include <ostream>

namespace stg::cli {

/// Entry point behind the `stgnet` binary. Returns the process exit code;
/// diagnostics go to `err`, results and tables to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stg::cli
