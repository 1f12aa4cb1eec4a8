#pragma once

#include <iosfwd>

namespace proselab::app {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;        // gateway, network, storage
inline constexpr int kExitUsage = 2;          // bad arguments, validation, not found
inline constexpr int kExitNeedsDecisions = 3;  // run produced spans, no TTY to ask

struct CliIo {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  bool stdin_is_tty = false;
};

int run_cli(int argc, const char* const* argv, CliIo io);

}  // namespace proselab::app
