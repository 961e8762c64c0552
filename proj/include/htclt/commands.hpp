#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "htclt/config.hpp"
#include "htclt/mcstats.hpp"

namespace htclt {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfig = 2, kExitSolver = 3 };

/// Files written by one run, each with its SHA-256.
struct RunManifest {
  std::string subcommand;
  std::string config_path;
  std::string config_snapshot;
  std::string output_dir;
  std::vector<std::pair<std::string, std::string>> artifacts;  // relative path, hash

  void add(const std::filesystem::path& file);
  std::string to_json() const;
};

struct CommandContext {
  AppConfig config;
  std::filesystem::path out;
  std::ostream& log;
};

int cmd_sample(CommandContext& ctx);
int cmd_moments_clt(CommandContext& ctx);
int cmd_stieltjes_clt(CommandContext& ctx);
int cmd_solve(CommandContext& ctx);
int cmd_verify(CommandContext& ctx);

std::vector<std::string> command_names();

/// Runs a subcommand, mapping failures to exit codes: 2 for configuration and
/// domain errors, 3 for solver non-convergence.
int run_command(const std::string& name, CommandContext& ctx, std::ostream& err);

std::string report_json(const StatReport& report);

}  // namespace htclt
