#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace armforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

struct Context {
  // serve: stops when this becomes true. Null installs SIGINT/SIGTERM handlers.
  std::atomic<bool>* stop = nullptr;
  std::function<void(std::uint16_t)> on_listening;
};

// args excludes the program name. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const Context& ctx = {});

}  // namespace armforge::cli
