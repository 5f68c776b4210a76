#include "avb/quasi/subgauss.hpp"

#include "avb/core/errors.hpp"

#include <cmath>
#include <limits>

namespace avb::quasi {

namespace {

void check_inputs(const Eigen::VectorXd &f, const Eigen::VectorXd &f_star, double kappa) {
  if (f.size() != f_star.size() || f.size() == 0)
    throw ShapeError("regression function vectors must be nonempty and equal length");
  if (!(kappa > 0.0))
    throw ConfigError("learning rate must be positive");
}

} // namespace

double subgauss_bound(const Eigen::VectorXd &f, const Eigen::VectorXd &f_star, double kappa,
                      double variance_proxy) {
  check_inputs(f, f_star, kappa);
  return std::exp(-0.5 * kappa * (1.0 - kappa * variance_proxy) * (f - f_star).squaredNorm());
}

SubGaussianCheck subgauss_inequality_check(const Eigen::VectorXd &f, const Eigen::VectorXd &f_star,
                                           double kappa, double variance_proxy,
                                           const NoiseSampler &noise, int mc, std::uint64_t seed) {
  check_inputs(f, f_star, kappa);
  if (mc < 2)
    throw ConfigError("need at least two Monte Carlo draws");
  Rng rng = make_rng(seed, {stable_hash("subgauss")});
  const Eigen::VectorXd delta = f_star - f;
  const double shift = delta.squaredNorm();
  // ratio = exp(−κ/2 Σ(δ² + 2δε)); Welford accumulation
  double mean = 0.0, m2 = 0.0;
  for (int t = 1; t <= mc; ++t) {
    double cross = 0.0;
    for (Eigen::Index i = 0; i < delta.size(); ++i)
      cross += delta(i) * noise(rng);
    const double ratio = std::exp(-0.5 * kappa * (shift + 2.0 * cross));
    const double d = ratio - mean;
    mean += d / t;
    m2 += d * (ratio - mean);
  }
  SubGaussianCheck out;
  out.lhs = mean;
  out.std_error = std::sqrt(m2 / (mc - 1) / mc);
  out.rhs = subgauss_bound(f, f_star, kappa, variance_proxy);
  out.margin = out.std_error > 0.0 ? (out.rhs - out.lhs) / out.std_error
                                   : (out.lhs <= out.rhs ? std::numeric_limits<double>::infinity()
                                                         : -std::numeric_limits<double>::infinity());
  out.holds = out.lhs <= out.rhs + 3.0 * out.std_error;
  return out;
}

SubGaussianCheck subgauss_gaussian_exact(const Eigen::VectorXd &f, const Eigen::VectorXd &f_star,
                                         double kappa, double sigma) {
  check_inputs(f, f_star, kappa);
  if (!(sigma > 0.0))
    throw ConfigError("noise scale must be positive");
  const double shift = (f_star - f).squaredNorm();
  SubGaussianCheck out;
  // E exp(−κδε) = exp(κ²σ²δ²/2)
  out.lhs = std::exp(-0.5 * kappa * shift + 0.5 * kappa * kappa * sigma * sigma * shift);
  out.rhs = subgauss_bound(f, f_star, kappa, sigma * sigma);
  out.holds = out.lhs <= out.rhs * (1.0 + 1e-12);
  out.margin = out.holds ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
  return out;
}

} // namespace avb::quasi
