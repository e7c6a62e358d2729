#ifndef AA_CLI_H_
#define AA_CLI_H_

#include <iosfwd>

namespace aa {

// Exit codes: 0 success, 1 gradient check above tolerance, 2 configuration
// error, 3 data error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aa

#endif  // AA_CLI_H_
