#pragma once

#include <iosfwd>

namespace storesim::cli {

// Exit codes: 0 success, 1 configuration error, 2 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace storesim::cli
