#pragma once

#include "avb/core/combine.hpp"
#include "avb/core/model_collection.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace avb::compare {

/// Model-selection variational Bayes: keep only the component with the largest γ.
struct SelectionResult {
  std::string selected_model;
  std::size_t selected_index = 0;
  Eigen::VectorXd selection_scores; // E_m − log α_m, collection order
  Eigen::VectorXd gamma;
};

/// argmax γ; exact ties go to the smaller complexity, then the smaller id.
[[nodiscard]] SelectionResult select_model(const CombinedPosterior &combined,
                                           const ModelCollection &collection);

struct DominanceCheck {
  double avb_objective = 0.0;
  double msvb_objective = 0.0;
  bool holds = false;
};

/// Objective of Σγ̂Ξ̂ against E_m̂ − log α_m̂; holds when avb ≤ msvb + 1e-10.
[[nodiscard]] DominanceCheck objective_dominance(const CombinedPosterior &combined,
                                                 const ModelCollection &collection,
                                                 const SelectionResult &selection);

/// Total variation between Σγ̂Ξ̂ and Ξ̂_m̂ for disjoint component supports: 1 − γ_m̂.
[[nodiscard]] double tv_combined_vs_selected(const CombinedPosterior &combined,
                                             const SelectionResult &selection);

/// ½ Σ |p − q| over a common finite support.
[[nodiscard]] double total_variation(const Eigen::Ref<const Eigen::VectorXd> &p,
                                     const Eigen::Ref<const Eigen::VectorXd> &q);

/// 41 log-spaced points in [1e-3, 1e3].
[[nodiscard]] std::vector<double> default_upsilon_grid();

struct RiskBound {
  double value = 0.0;     // minimum over the grid
  double upsilon = 0.0;   // minimizing grid point (first on ties)
  std::vector<double> per_upsilon;
};

/// min_υ (1/υ)[KL(Ξ, post) + log Σ post·exp(υ·loss)] on a finite atom set,
/// loss_a = n·d²(atom a, truth). The exponential moment is taken in log domain.
[[nodiscard]] RiskBound risk_bound_functional(const Eigen::Ref<const Eigen::VectorXd> &posterior,
                                              const Eigen::Ref<const Eigen::VectorXd> &candidate,
                                              const Eigen::Ref<const Eigen::VectorXd> &loss,
                                              const std::vector<double> &upsilon_grid);

/// E_Ξ[loss].
[[nodiscard]] double expected_risk(const Eigen::Ref<const Eigen::VectorXd> &candidate,
                                   const Eigen::Ref<const Eigen::VectorXd> &loss);

} // namespace avb::compare
