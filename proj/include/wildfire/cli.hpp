#pragma once

#include <iosfwd>

namespace wildfire {

/// Exit codes: 0 analysis completed, 1 a vulnerability chain reaches an
/// entry point (analyze only), 2 configuration or input error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wildfire
