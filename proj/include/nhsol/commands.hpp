#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "nhsol/config.hpp"

namespace nhsol {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitGeometry = 3,
  kExitCheckFailed = 4,
  kExitDiverged = 5,
};

struct CommandOptions {
  std::filesystem::path config;
  Overrides overrides;
  bool verify = false;
};

// Runs one subcommand (geom, check-constant, flow, identity-check) and returns
// its exit code. Human-readable progress goes to `out`, errors to `err`.
int run_command(const std::string& command, const CommandOptions& opts, std::ostream& out,
                std::ostream& err);

// Individual commands on an already validated config; they write into `dir`
// and return the exit code. Errors are reported through exceptions.
class OutputDir;
int cmd_geom(const RunConfig& cfg, OutputDir& dir, std::ostream& out);
int cmd_check_constant(const RunConfig& cfg, OutputDir& dir, std::ostream& out);
int cmd_flow(const RunConfig& cfg, OutputDir& dir, std::ostream& out);
int cmd_identity_check(const RunConfig& cfg, OutputDir& dir, std::ostream& out);

}  // namespace nhsol
