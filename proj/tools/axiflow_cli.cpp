#include <CLI11.hpp>

#include <iostream>

#include "axiflow/cli_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Subsonic axisymmetric flow past an obstacle: stream-function solver and checks"};
  app.require_subcommand(1, 1);
  std::string config_path;
  axiflow::RunOptions opt;
  for (const char* name : {"solve", "verify", "annulus", "sweep", "bracket"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration file")->required();
    sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", opt.threads, "worker threads")->capture_default_str();
    sub->add_option("--resume", opt.resume, "checkpoint to resume from");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : axiflow::kExitUsage;
  }
  opt.task = app.get_subcommands().front()->get_name();
  try {
    const axiflow::RunConfig cfg = axiflow::parse_config(config_path);
    return axiflow::run(cfg, opt);
  } catch (const axiflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return axiflow::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return axiflow::kExitUsage;
  }
}
