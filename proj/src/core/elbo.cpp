#include "avb/core/elbo.hpp"

#include "avb/core/errors.hpp"

#include <cmath>

namespace avb {

ElboBreakdown ElboBreakdown::make(double expected_nll, double kl_to_prior,
                                  std::size_t mc_samples_used,
                                  std::optional<std::uint64_t> mc_seed) {
  if (!std::isfinite(expected_nll) || !std::isfinite(kl_to_prior))
    throw NonFiniteObjective("non-finite variational objective term");
  // roundoff in closed-form KLs can dip a hair below zero
  const double slack = 1e-9 * (1.0 + std::abs(expected_nll));
  if (kl_to_prior < -slack)
    throw OutOfSupport("negative KL divergence to prior");
  if (kl_to_prior < 0.0)
    kl_to_prior = 0.0;
  ElboBreakdown out;
  out.expected_nll = expected_nll;
  out.kl_to_prior = kl_to_prior;
  out.total = expected_nll + kl_to_prior;
  out.mc_samples_used = mc_samples_used;
  out.mc_seed = mc_seed;
  return out;
}

bool comparable(const ElboBreakdown &a, const ElboBreakdown &b) noexcept {
  return a.mc_samples_used == b.mc_samples_used;
}

} // namespace avb
