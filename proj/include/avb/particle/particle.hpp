#pragma once

#include "avb/core/elbo.hpp"
#include "avb/core/rng.hpp"
#include "avb/particle/particle_state.hpp"
#include "avb/particle/space.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <unordered_set>
#include <vector>

namespace avb::particle {

/// Log-likelihood of a parameter value and, optionally, its gradient.
struct ParticleModel {
  std::function<double(const Eigen::VectorXd &)> log_likelihood;
  /// Returns the log-likelihood and writes its gradient; may be empty when
  /// the centers never move (zero learning rate).
  std::function<double(const Eigen::VectorXd &, Eigen::VectorXd &)> log_likelihood_gradient;
};

/// Draws an atom outside the occupied set.
using Proposal =
    std::function<AtomIndex(Rng &, const std::unordered_set<AtomIndex> &occupied)>;

/// Uniform over unoccupied atoms (rejection while sparse, enumeration otherwise).
[[nodiscard]] Proposal uniform_unoccupied(const DiscretizedSpace &space);

/// Σ_q ω_q [−ℓ_q + log(ω_q N)] with 0 log 0 = 0.
[[nodiscard]] double particle_objective(const ParticleState &state,
                                        const Eigen::Ref<const Eigen::VectorXd> &loglik);

/// Objective split into expected NLL and KL to the uniform discretized prior.
[[nodiscard]] ElboBreakdown particle_breakdown(const ParticleState &state,
                                               const Eigen::Ref<const Eigen::VectorXd> &loglik);

/// ω_q ∝ exp(ℓ_q), the minimizer of the objective for fixed centers.
[[nodiscard]] ParticleState weight_update(ParticleState state,
                                          const Eigen::Ref<const Eigen::VectorXd> &loglik);

/// Within each group of coinciding centers keeps the highest-weight member
/// (lowest index on weight ties) and replaces the rest with fresh atoms.
[[nodiscard]] std::vector<AtomIndex> tie_break(const DiscretizedSpace &space,
                                               const std::vector<AtomIndex> &proposed,
                                               const Eigen::Ref<const Eigen::VectorXd> &weights,
                                               Rng &rng, const Proposal &proposal);

enum class Schedule { inverse_sqrt, constant };

struct ParticleConfig {
  std::size_t particles = 1; // Q
  int iterations = 100;      // T
  double learning_rate = 0.0; // r₀
  Schedule schedule = Schedule::inverse_sqrt;
  std::uint64_t seed = 0;
};

struct ParticleFit {
  ParticleState state;
  ElboBreakdown elbo;
  std::vector<double> trace; // objective at the initial state and after every iteration
};

/// Builds a state on the given centers with optimal weights.
[[nodiscard]] ParticleState make_state(const DiscretizedSpace &space,
                                       std::vector<AtomIndex> centers,
                                       const ParticleModel &model);

/// Projected gradient ascent on the centers, project + tie-break, weight update.
/// Q = N starts from every atom; otherwise from Q distinct uniform atoms
/// unless initial centers are supplied.
[[nodiscard]] ParticleFit run_algorithm2(const DiscretizedSpace &space, const ParticleModel &model,
                                         const ParticleConfig &config,
                                         std::optional<std::vector<AtomIndex>> initial = std::nullopt,
                                         const Proposal &proposal = {});

} // namespace avb::particle
