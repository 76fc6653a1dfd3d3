#pragma once

#include <chrono>
#include <string>
#include <vector>

namespace fgac {

struct ProcessResult {
  int exit_code = -1;  // -1 when killed by a signal
  bool timed_out = false;
  std::string out;
  std::string err;
};

/// Runs argv[0] (looked up in PATH) with a wall-clock limit; on timeout the
/// child is killed. Throws Error(SolverUnavailable) if it cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv, std::chrono::milliseconds timeout);

}  // namespace fgac
