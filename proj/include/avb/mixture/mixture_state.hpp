#pragma once

#include <Eigen/Core>

#include <vector>

namespace avb::mixture {

struct GaussianFactor {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

struct WishartFactor {
  double dof = 0.0;
  Eigen::MatrixXd scale;
};

/// Mean-field factors q(z) q(ϖ) Π_k q(ϑ_k) q(Λ_k).
struct MixtureVariationalState {
  Eigen::MatrixXd responsibilities;   // n × m, rows sum to one
  Eigen::VectorXd weight_factor;      // Dirichlet concentration
  std::vector<GaussianFactor> mean_factors;
  std::vector<WishartFactor> precision_factors;

  [[nodiscard]] int components() const noexcept {
    return static_cast<int>(weight_factor.size());
  }
};

} // namespace avb::mixture
