#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>

namespace avb::deep {

/// Fully connected ReLU network shape: K affine layers, hidden width M,
/// scalar output, parameters bounded by B in sup-norm.
struct NetArchitecture {
  int depth = 2;       // K ≥ 2
  int width = 1;       // M ≥ 1
  int input_dim = 1;   // d
  double bound = 1.0;  // B > 0

  /// (d+1)M + (K−2)(M²+M) + (M+1)
  [[nodiscard]] std::size_t parameter_count() const noexcept {
    const auto d = static_cast<std::size_t>(input_dim);
    const auto k = static_cast<std::size_t>(depth);
    const auto m = static_cast<std::size_t>(width);
    return (d + 1) * m + (k - 2) * (m * m + m) + (m + 1);
  }

  /// Throws ConfigError on an invalid shape.
  void validate() const;

  [[nodiscard]] std::string id() const {
    return "K" + std::to_string(depth) + "_M" + std::to_string(width);
  }
};

/// Product of Uniform(lower_j, upper_j) over the p network coordinates.
struct BoxVariationalState {
  NetArchitecture arch;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  [[nodiscard]] Eigen::Index size() const noexcept { return lower.size(); }
  [[nodiscard]] Eigen::VectorXd widths() const { return upper - lower; }
  [[nodiscard]] Eigen::VectorXd centers() const { return 0.5 * (lower + upper); }
};

} // namespace avb::deep
