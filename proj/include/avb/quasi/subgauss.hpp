#pragma once

#include "avb/core/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>

namespace avb::quasi {

/// Draws one centered noise value.
using NoiseSampler = std::function<double(Rng &)>;

struct SubGaussianCheck {
  double lhs = 0.0;        // estimate (or exact value) of E[q^κ(f)/q^κ(f*)]
  double std_error = 0.0;  // zero for closed-form evaluations
  double rhs = 0.0;        // exp(−½ κ(1 − κς²) Σ(f − f*)²)
  double margin = 0.0;     // (rhs − lhs) / std_error; +∞ when exact and holding
  bool holds = false;      // lhs ≤ rhs + 3·std_error
};

/// exp(−½ κ(1 − κς²) Σ_i (f_i − f*_i)²).
[[nodiscard]] double subgauss_bound(const Eigen::VectorXd &f, const Eigen::VectorXd &f_star,
                                    double kappa, double variance_proxy);

/// Monte Carlo over Y_i = f*_i + ε_i with ε_i drawn independently from noise.
[[nodiscard]] SubGaussianCheck subgauss_inequality_check(const Eigen::VectorXd &f,
                                                         const Eigen::VectorXd &f_star,
                                                         double kappa, double variance_proxy,
                                                         const NoiseSampler &noise, int mc,
                                                         std::uint64_t seed);

/// Exact value for N(0, σ²) noise through the Gaussian moment generating function.
[[nodiscard]] SubGaussianCheck subgauss_gaussian_exact(const Eigen::VectorXd &f,
                                                       const Eigen::VectorXd &f_star,
                                                       double kappa, double sigma);

} // namespace avb::quasi
