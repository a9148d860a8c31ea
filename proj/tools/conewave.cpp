// conewave SUBCOMMAND --config PATH [--out DIR] [--seed U64] [--threads N]

#include <iostream>

#include <CLI11.hpp>

#include "conewave/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Radial focusing wave equation: simulation and estimate verification"};
  app.require_subcommand(1);

  conewave::CliOptions options;
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  for (const auto& name : conewave::command_names()) {
    auto* sub = app.add_subcommand(name, "Run the " + name + " scenario");
    sub->add_option("--config", options.config_path, "Config file (sectioned key = value)")
        ->required();
    sub->add_option("--out", out_dir, "Output directory (overrides [output] directory)");
    sub->add_option("--seed", seed, "Seed for randomized verification (overrides [verify] seed)");
    sub->add_option("--threads", threads, "Worker threads (default: CONEWAVE_THREADS)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : conewave::exit_config;
  }

  auto* sub = app.get_subcommands().front();
  options.command = sub->get_name();
  if (sub->count("--out")) options.out_dir = out_dir;
  if (sub->count("--seed")) options.seed = seed;
  if (sub->count("--threads")) options.threads = threads;
  return conewave::run_command(options, std::cerr);
}
