#include "avb/cli/config.hpp"
#include "avb/cli/experiments.hpp"
#include "avb/cli/logging.hpp"
#include "avb/cli/serialize.hpp"
#include "avb/core/errors.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

int main(int argc, char **argv) {
  CLI::App app{"Adaptive variational Bayes experiments"};
  app.require_subcommand(1);

  std::string run_config;
  int jobs = 1;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  auto *run = app.add_subcommand("run", "Run an experiment and write JSON/CSV results");
  run->add_option("config", run_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--seed", seed, "Master seed (overrides the config)");

  std::string validate_config;
  auto *validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", validate_config, "Experiment config (JSON)")->required();

  std::string result_path;
  auto *replay = app.add_subcommand("replay", "Recompute model weights from a result file");
  replay->add_option("result", result_path, "Result JSON")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto config = avb::cli::load_config(run_config);
      if (seed)
        config.seeds.master = *seed;
      if (!out_dir.empty())
        config.output_dir = out_dir;
      const auto output = avb::cli::run_experiment(config, jobs);
      const auto files = avb::cli::write_outputs(output, config, config.output_dir);
      for (const auto &f : files)
        std::cout << f.string() << '\n';
      return 0;
    }
    if (*validate) {
      const auto config = avb::cli::load_config(validate_config);
      std::cout << "ok: " << config.name << " (" << avb::cli::to_string(config.kind) << ")\n";
      return 0;
    }
    if (*replay) {
      const auto report = avb::cli::replay_file(result_path);
      std::cout << (report.ok ? "ok" : "mismatch") << ": " << report.models
                << " models, max |Δγ| = " << report.max_abs_diff << '\n';
      return report.ok ? 0 : 1;
    }
  } catch (const avb::ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
