#pragma once

// Process exit codes of the command-line tool.

#include <exception>

#include "vmix/errors.hpp"

namespace vmix {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_solver = 3, exit_gate = 4 };

/// Maps the active exception class to its exit code.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const StabilityGateError*>(&e)) return exit_gate;
  if (dynamic_cast<const SolverError*>(&e) || dynamic_cast<const OracleError*>(&e) ||
      dynamic_cast<const ModeError*>(&e) || dynamic_cast<const MeshError*>(&e))
    return exit_solver;
  return exit_config;
}

}  // namespace vmix
