#pragma once

#include "avb/core/combine.hpp"
#include "avb/deep/likelihood.hpp"
#include "avb/deep/variational.hpp"

#include <map>
#include <string>
#include <vector>

namespace avb::quasi {

struct QuasiDeepFit {
  ModelCollection collection;
  std::map<std::string, deep::BoxFit> fits;
  CombinedPosterior combined;
};

/// Fits every architecture against −(κ/2)Σ(y − f(x))² and combines the boxes.
/// Each architecture trains from the seed keyed by its id.
[[nodiscard]] QuasiDeepFit quasi_fit_deep(const std::vector<deep::NetArchitecture> &grid,
                                          const deep::QuasiGaussianRegression &model,
                                          const deep::TrainConfig &config, double b0);

} // namespace avb::quasi
