#pragma once

#include <Eigen/Core>

namespace avb {

/// Tolerances shared by the probability-vector checks.
struct Tolerances {
  double probability_sum = 1e-12;
  double identity = 1e-10;
};

/// log(sum(exp(v))) without overflow; -inf for an empty or all -inf input.
[[nodiscard]] double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd> &v);

/// Normalizes log-weights into log-probabilities in place with one log-sum-exp.
void log_normalize(Eigen::Ref<Eigen::VectorXd> log_w);

/// exp(log_normalize(log_w)).
[[nodiscard]] Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd> &log_w);

/// x log(x / y) with the 0 log 0 = 0 convention.
[[nodiscard]] double xlogx_over_y(double x, double y);

/// Throws ShapeError unless v is nonnegative and sums to one within tol.
void require_probability_vector(const Eigen::Ref<const Eigen::VectorXd> &v,
                                double tol, const char *what);

} // namespace avb
