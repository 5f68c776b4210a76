#pragma once

#include "avb/core/model_collection.hpp"

#include <Eigen/Core>

namespace avb {

/// KL(⊗ Unif(lower_j, upper_j) ‖ ⊗ Unif(−B, B)) = Σ_j log(2B / (upper_j − lower_j)).
[[nodiscard]] double kl_uniform_box(const Eigen::Ref<const Eigen::VectorXd> &lower,
                                    const Eigen::Ref<const Eigen::VectorXd> &upper,
                                    double bound);

/// Same divergence against Unif(lo, hi) per coordinate (used by the SBM family).
[[nodiscard]] double kl_uniform_intervals(const Eigen::Ref<const Eigen::VectorXd> &lower,
                                          const Eigen::Ref<const Eigen::VectorXd> &upper,
                                          double support_lo, double support_hi);

/// KL(Cat(gamma) ‖ Cat(alpha)), 0 log 0 = 0.
[[nodiscard]] double kl_categorical(const Eigen::Ref<const Eigen::VectorXd> &gamma,
                                    const Eigen::Ref<const Eigen::VectorXd> &alpha);

/// Objective of the mixture Σ γ_m Ξ_m over disjoint supports:
/// KL(γ, α) + Σ_m γ_m E_m.
[[nodiscard]] double elbo_of_combination(const ModelCollection &collection,
                                         const Eigen::Ref<const Eigen::VectorXd> &gamma,
                                         const Eigen::Ref<const Eigen::VectorXd> &objectives);

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// (Σ|γ − α̂|)² against 2·KL(Ξ̂, posterior).
[[nodiscard]] BoundCheck model_probability_gap_bound(
    const Eigen::Ref<const Eigen::VectorXd> &gamma,
    const Eigen::Ref<const Eigen::VectorXd> &alpha_hat, double kl_to_posterior);

/// Σ xi1·g ≤ KL(xi1, xi2) + log Σ xi2·e^g on a finite support.
[[nodiscard]] BoundCheck change_of_measure_check(
    const Eigen::Ref<const Eigen::VectorXd> &xi1,
    const Eigen::Ref<const Eigen::VectorXd> &xi2,
    const Eigen::Ref<const Eigen::VectorXd> &g);

} // namespace avb
