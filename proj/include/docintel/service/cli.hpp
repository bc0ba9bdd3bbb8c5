#pragma once

#include <ostream>

namespace docintel::service {

// Exit codes: 0 success, 1 user error, 2 internal error. Messages for
// failures go to err; --json prints the service wire objects to out.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace docintel::service
