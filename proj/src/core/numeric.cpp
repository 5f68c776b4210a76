#include "avb/core/numeric.hpp"

#include "avb/core/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace avb {

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd> &v) {
  if (v.size() == 0)
    return -std::numeric_limits<double>::infinity();
  const double hi = v.maxCoeff();
  if (!std::isfinite(hi))
    return hi;
  return hi + std::log((v.array() - hi).exp().sum());
}

void log_normalize(Eigen::Ref<Eigen::VectorXd> log_w) {
  const double z = log_sum_exp(log_w);
  log_w.array() -= z;
}

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd> &log_w) {
  Eigen::VectorXd out = log_w;
  log_normalize(out);
  // Scalar exp: the vectorized one clamps its argument, so exp(−1e6) would
  // come back as a denormal rather than 0.
  return out.unaryExpr([](double v) { return std::exp(v); });
}

double xlogx_over_y(double x, double y) {
  if (x == 0.0)
    return 0.0;
  return x * (std::log(x) - std::log(y));
}

void require_probability_vector(const Eigen::Ref<const Eigen::VectorXd> &v,
                                double tol, const char *what) {
  if (v.size() == 0)
    throw ShapeError(std::string(what) + ": empty probability vector");
  if ((v.array() < 0.0).any() || !v.allFinite())
    throw ShapeError(std::string(what) + ": negative or non-finite entry");
  if (std::abs(v.sum() - 1.0) > tol)
    throw ShapeError(std::string(what) + ": entries do not sum to one");
}

} // namespace avb
