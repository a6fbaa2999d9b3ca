#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace capforge {

// Exit codes: 0 success, 1 usage / configuration / domain error,
// 2 data, format or integrity error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
// Convenience for tests: args excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace capforge
