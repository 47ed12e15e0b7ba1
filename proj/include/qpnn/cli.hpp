#ifndef QPNN_CLI_HPP
#define QPNN_CLI_HPP

#include <iosfwd>

namespace qpnn {

// Exit codes: 0 success, 1 validation, 2 verification failure, 3 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace qpnn

#endif
