#include "avb/core/divergence.hpp"

#include "avb/core/errors.hpp"
#include "avb/core/numeric.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace avb {

double kl_uniform_intervals(const Eigen::Ref<const Eigen::VectorXd> &lower,
                            const Eigen::Ref<const Eigen::VectorXd> &upper,
                            double support_lo, double support_hi) {
  if (lower.size() != upper.size())
    throw ShapeError("interval endpoint arrays differ in length");
  const double log_support = std::log(support_hi - support_lo);
  double kl = 0.0;
  for (Eigen::Index j = 0; j < lower.size(); ++j) {
    const double gap = upper(j) - lower(j);
    if (!(gap > 0.0))
      throw DegenerateBox("interval " + std::to_string(j) + " has nonpositive width");
    if (lower(j) < support_lo || upper(j) > support_hi)
      throw OutOfSupport("interval " + std::to_string(j) + " leaves the prior support");
    kl += log_support - std::log(gap);
  }
  return kl;
}

double kl_uniform_box(const Eigen::Ref<const Eigen::VectorXd> &lower,
                      const Eigen::Ref<const Eigen::VectorXd> &upper,
                      double bound) {
  return kl_uniform_intervals(lower, upper, -bound, bound);
}

double kl_categorical(const Eigen::Ref<const Eigen::VectorXd> &gamma,
                      const Eigen::Ref<const Eigen::VectorXd> &alpha) {
  if (gamma.size() != alpha.size())
    throw ShapeError("categorical vectors differ in length");
  double kl = 0.0;
  for (Eigen::Index m = 0; m < gamma.size(); ++m) {
    if (gamma(m) == 0.0)
      continue;
    if (alpha(m) == 0.0)
      throw AbsoluteContinuityError("gamma puts mass where alpha has none");
    kl += xlogx_over_y(gamma(m), alpha(m));
  }
  return kl;
}

double elbo_of_combination(const ModelCollection &collection,
                           const Eigen::Ref<const Eigen::VectorXd> &gamma,
                           const Eigen::Ref<const Eigen::VectorXd> &objectives) {
  if (static_cast<std::size_t>(gamma.size()) != collection.size() ||
      objectives.size() != gamma.size())
    throw ShapeError("gamma/objective length differs from model count");
  // log α is used directly so that underflowed α_m still behave
  const auto &log_alpha = collection.log_alpha();
  double value = 0.0;
  for (Eigen::Index m = 0; m < gamma.size(); ++m) {
    if (gamma(m) == 0.0)
      continue;
    if (!std::isfinite(log_alpha(m)))
      throw AbsoluteContinuityError("gamma puts mass where alpha has none");
    value += gamma(m) * (std::log(gamma(m)) - log_alpha(m) + objectives(m));
  }
  return value;
}

BoundCheck model_probability_gap_bound(const Eigen::Ref<const Eigen::VectorXd> &gamma,
                                       const Eigen::Ref<const Eigen::VectorXd> &alpha_hat,
                                       double kl_to_posterior) {
  if (gamma.size() != alpha_hat.size())
    throw ShapeError("model probability vectors differ in length");
  const double l1 = (gamma - alpha_hat).cwiseAbs().sum();
  BoundCheck out;
  out.lhs = l1 * l1;
  out.rhs = 2.0 * kl_to_posterior;
  out.holds = out.lhs <= out.rhs + 1e-12;
  return out;
}

BoundCheck change_of_measure_check(const Eigen::Ref<const Eigen::VectorXd> &xi1,
                                   const Eigen::Ref<const Eigen::VectorXd> &xi2,
                                   const Eigen::Ref<const Eigen::VectorXd> &g) {
  if (xi1.size() != xi2.size() || g.size() != xi1.size())
    throw ShapeError("atom arrays differ in length");
  BoundCheck out;
  out.lhs = xi1.dot(g);
  Eigen::VectorXd terms(xi2.size());
  for (Eigen::Index i = 0; i < xi2.size(); ++i)
    terms(i) = xi2(i) > 0.0 ? std::log(xi2(i)) + g(i)
                            : -std::numeric_limits<double>::infinity();
  out.rhs = kl_categorical(xi1, xi2) + log_sum_exp(terms);
  out.holds = out.lhs <= out.rhs + 1e-10;
  return out;
}

} // namespace avb
