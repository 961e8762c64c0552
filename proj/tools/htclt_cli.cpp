// Batch entry point: htclt <subcommand> --config file.ini [--out dir] [--seed n] [--threads n]
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "htclt/commands.hpp"
#include "htclt/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"heavy-tailed random matrix fluctuation experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir, seed, threads;
  for (const std::string& name : htclt::command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "INI experiment config")->required();
    sub->add_option("--out", out_dir, "output directory (overrides run.out)");
    sub->add_option("--seed", seed, "base seed (overrides run.seed)");
    sub->add_option("--threads", threads, "worker threads (overrides run.threads)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : htclt::kExitConfig;
  }
  const std::string name = app.get_subcommands().front()->get_name();

  try {
    htclt::AppConfig config = htclt::AppConfig::load(config_path);
    if (!seed.empty()) config.set("run.seed", seed);
    if (!threads.empty()) config.set("run.threads", threads);
    if (!out_dir.empty()) config.set("run.out", out_dir);
    const std::string out = config.get("run.out", "out");
    htclt::CommandContext ctx{std::move(config), out, std::cout};
    return htclt::run_command(name, ctx, std::cerr);
  } catch (const htclt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return htclt::kExitConfig;
  }
}
