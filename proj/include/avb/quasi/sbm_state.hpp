#pragma once

#include <Eigen/Core>

namespace avb::quasi {

/// Unif(lower_kh, upper_kh) on each connectivity U_kh (k ≤ h, mirrored), and
/// Cat(ν_i) on each node label.
struct SbmVariationalState {
  Eigen::MatrixXd lower;        // m × m symmetric
  Eigen::MatrixXd upper;        // m × m symmetric
  Eigen::MatrixXd label_probs;  // n × m, rows sum to one

  [[nodiscard]] int communities() const noexcept {
    return static_cast<int>(lower.rows());
  }
};

} // namespace avb::quasi
