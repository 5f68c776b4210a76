#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace avb::cli {

enum class ExperimentKind { mixture, deep_regression, sbm, particle_demo, quasi_regression };

[[nodiscard]] ExperimentKind parse_kind(const std::string &name);
[[nodiscard]] std::string to_string(ExperimentKind kind);

struct DatasetConfig {
  std::string source = "builtin";       // builtin | csv
  std::filesystem::path path;           // csv only, resolved against the config file
  std::string target = "y";             // regression target column
  std::size_t n = 200;                  // builtin sample size (nodes for sbm)
  double noise = 0.1;                   // builtin regression noise scale
  std::string noise_kind = "gaussian";  // gaussian | uniform (half-width = noise)
  int blocks = 2;                       // planted sbm
  double p_in = 0.9;
  double p_out = 0.1;
  std::vector<double> truth{0.5, -1.0}; // particle demo polynomial coefficients
};

struct OptimizerConfig {
  // deep / quasi regression
  int epochs = 500;
  double learning_rate = 1e-3;
  int mc_samples = 8;
  int eval_samples = 256;
  std::string name = "adam";
  std::size_t batch_size = 0;
  double init_half_width_fraction = 0.05;
  double init_center_spread = 0.1;
  // mixture / sbm
  int max_iters = 500;
  double tol = 1e-6;
  int restarts = 5;
  // particle demo
  std::size_t particles = 0;  // 0: every atom
  int iterations = 100;
  double particle_learning_rate = 0.0;
  double spacing = 0.25;
  double bound = 2.0;
};

struct PriorConfig {
  double b0 = 1.0;
  double exponent = 1.0;        // L
  std::optional<double> bound;  // network bound B; default √n
};

struct SeedConfig {
  std::uint64_t master = 0;
  int repeats = 1;
};

struct ExperimentConfig {
  std::string name;
  ExperimentKind kind = ExperimentKind::mixture;
  DatasetConfig dataset;
  std::vector<int> sizes;                         // mixture m, sbm m, particle degree
  std::vector<std::pair<int, int>> architectures; // (depth, width)
  OptimizerConfig optimizer;
  PriorConfig prior;
  SeedConfig seeds;
  std::optional<double> kappa;
  std::optional<double> variance_proxy;
  std::filesystem::path output_dir = "results";
  int predict_draws = 100;
  double test_fraction = 0.1;
  int density_grid = 41; // mixture plot resolution per axis

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

/// Parses and validates; relative paths resolve against base_dir.
[[nodiscard]] ExperimentConfig parse_config(const nlohmann::json &doc,
                                            const std::filesystem::path &base_dir = {});
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path &path);

/// Canonical JSON form (echoed into results).
[[nodiscard]] nlohmann::json to_json(const ExperimentConfig &config);

} // namespace avb::cli
