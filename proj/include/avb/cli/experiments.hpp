#pragma once

#include "avb/cli/config.hpp"
#include "avb/compare/compare.hpp"
#include "avb/core/combine.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace avb::cli {

/// Plot data as CSV text (header + rows); rendering is external.
struct PlotData {
  std::string name;
  std::string csv;
};

struct RunOutput {
  int repeat = 0;
  nlohmann::json result;
  std::vector<PlotData> plots;
};

struct ExperimentOutput {
  std::vector<RunOutput> runs;
  nlohmann::json summary;
};

/// One model's fit, or the error that excluded it.
struct ModelOutcome {
  std::string id;
  std::optional<ModelFit> fit;
  std::string error;
  nlohmann::json extra = nlohmann::json::object();
};

struct Assembled {
  ModelCollection collection; // surviving models, α renormalized over them
  CombinedPosterior combined;
  compare::SelectionResult selection;
  compare::DominanceCheck dominance;
  nlohmann::json excluded = nlohmann::json::array();
};

/// Combines the surviving fits. Throws NumericalBreakdown when none survive
/// and avb::Error when objective dominance fails.
[[nodiscard]] Assembled assemble(const ModelCollection &full,
                                 const std::vector<ModelOutcome> &outcomes,
                                 const std::string &label);

/// Runs fn(0..count−1) on up to jobs threads. The first exception (by index)
/// is rethrown after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)> &fn);

/// Seed of the substream keyed by (master, repeat, key).
[[nodiscard]] std::uint64_t substream_seed(std::uint64_t master, int repeat, const std::string &key);

/// Every repeat of the configured experiment. Results do not depend on jobs.
/// Throws when a run violates objective dominance.
[[nodiscard]] ExperimentOutput run_experiment(const ExperimentConfig &config, int jobs = 1);

/// Writes <name>_repeat<r>.json, plot CSVs and <name>_summary.json into dir;
/// returns the written paths.
std::vector<std::filesystem::path> write_outputs(const ExperimentOutput &output,
                                                 const ExperimentConfig &config,
                                                 const std::filesystem::path &dir);

} // namespace avb::cli
