#pragma once

#include <iosfwd>

namespace doseopt::cli {

// Exit codes: 0 success, 2 user or config error, 3 resource cap,
// 4 diff failure under `reproduce --strict`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace doseopt::cli
