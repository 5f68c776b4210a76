#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

namespace avb {

/// Variational objective 𝓔 = expected negative log-likelihood + KL to prior.
/// The ELBO proper is −total.
struct ElboBreakdown {
  double expected_nll = 0.0;
  double kl_to_prior = 0.0;
  double total = 0.0;
  std::size_t mc_samples_used = 0; // 0 when every term is exact
  std::optional<std::uint64_t> mc_seed;

  /// Builds a breakdown with total = nll + kl. Throws NonFiniteObjective on
  /// non-finite parts and OutOfSupport on a negative KL (beyond roundoff).
  static ElboBreakdown make(double expected_nll, double kl_to_prior,
                            std::size_t mc_samples_used = 0,
                            std::optional<std::uint64_t> mc_seed = std::nullopt);

  [[nodiscard]] bool is_exact() const noexcept { return mc_samples_used == 0; }
};

/// True when two breakdowns were produced under the same Monte Carlo settings.
[[nodiscard]] bool comparable(const ElboBreakdown &a, const ElboBreakdown &b) noexcept;

} // namespace avb
