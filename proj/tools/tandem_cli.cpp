#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tandem/cli.hpp"

int main(int argc, char** argv) {
  using namespace tandem::cli;

  CLI::App app{"Tail bounds and simulation for tandem queues"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  Overrides o;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--runs", o.runs, "simulation runs");
  app.add_option("--path-len", o.path_len, "jobs per simulated path");
  app.add_option("--rho", o.rho, "bottleneck load; rescales the arrival law");
  app.add_option("--out", o.out, "output file (directory for figure)");
  app.add_option("--format", o.format, "csv or json");
  app.add_option("--threads", o.threads, "simulation threads (0: all cores)");

  std::string figure_model;
  for (const char* name : {"bound", "simulate", "compare", "verify"}) {
    app.add_subcommand(name);
  }
  app.add_subcommand("figure")->add_option("model", figure_model, "dm2 or e2m2")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "error: cannot read " << config_path << '\n';
        return 1;
      }
      cfg = parse_run_config(nlohmann::json::parse(in));
    }
    cfg.command = command_from_string(app.get_subcommands().front()->get_name());
    if (cfg.command == Command::figure) cfg.figure_model = figure_model;
    apply(cfg, o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return run(cfg);
}
