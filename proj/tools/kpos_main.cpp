#include <CLI11.hpp>

#include <iostream>
#include <utility>

#include "kpos/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"kpos: sampled checks of positivity properties for surface group representations"};
  app.require_subcommand(1, 1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  const std::pair<const char*, const char*> commands[] = {
      {"check", "run the configured checks and write one report per check"},
      {"sweep", "run the checks along a deformation path and write sweep.csv"},
      {"crosstable", "tabulate cross ratios over sampled quadruples"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 64;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  kpos::cli::ExperimentConfig cfg;
  try {
    cfg = kpos::cli::load_config(config_path);
    if (seed) kpos::cli::set_seed(cfg, *seed);
    if (jobs) kpos::cli::set_jobs(cfg, *jobs);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
  } catch (const kpos::Error& e) {
    std::cerr << kpos::error_code_name(e.code()) << ": " << e.what() << "\n";
    return kpos::cli::exit_code(e);
  }
  return kpos::cli::run_command(command, cfg, std::cout, std::cerr);
}
