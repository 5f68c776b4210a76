#pragma once

#include "avb/core/elbo.hpp"
#include "avb/core/model_collection.hpp"
#include "avb/core/variational_state.hpp"

#include <Eigen/Core>

#include <map>
#include <string>
#include <vector>

namespace avb {

/// One fitted model: its variational state and objective.
struct ModelFit {
  VariationalState state;
  ElboBreakdown elbo;
};

/// Σ_m γ_m Ξ_m over a model collection. Vectors follow collection order.
struct CombinedPosterior {
  std::vector<std::string> model_ids;
  Eigen::VectorXd gamma;
  Eigen::VectorXd log_gamma;
  Eigen::VectorXd log_alpha;
  std::map<std::string, VariationalState> components;
  std::map<std::string, ElboBreakdown> per_model_elbo;
  std::vector<std::string> warnings;

  /// E_m in collection order.
  [[nodiscard]] Eigen::VectorXd objectives() const;
  [[nodiscard]] std::size_t size() const noexcept { return model_ids.size(); }
};

/// γ_m = α_m exp(−E_m) / Σ α exp(−E), in log domain.
[[nodiscard]] CombinedPosterior combine_posteriors(
    const ModelCollection &collection, const std::map<std::string, ModelFit> &fits);

/// Log-domain model weights from log α and objective totals.
[[nodiscard]] Eigen::VectorXd combined_log_weights(
    const Eigen::Ref<const Eigen::VectorXd> &log_alpha,
    const Eigen::Ref<const Eigen::VectorXd> &objectives);

} // namespace avb
