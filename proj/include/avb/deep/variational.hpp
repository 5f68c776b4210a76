#pragma once

#include "avb/core/combine.hpp"
#include "avb/core/elbo.hpp"
#include "avb/core/rng.hpp"
#include "avb/deep/box_state.hpp"
#include "avb/deep/likelihood.hpp"
#include "avb/deep/network.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace avb::deep {

enum class OptimizerKind { adam, projected_gd };

[[nodiscard]] OptimizerKind parse_optimizer(const std::string &name);
[[nodiscard]] std::string to_string(OptimizerKind kind);

struct TrainConfig {
  int epochs = 500;
  double learning_rate = 1e-3;
  int mc_samples = 8;        // V per gradient step
  int eval_samples = 256;    // V for the final objective
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;
  std::size_t batch_size = 0; // 0: full batch
  double min_gap_fraction = 1e-6; // ε_gap = fraction · B
  double init_half_width_fraction = 0.05;
  double init_center_spread = 0.1;

  void validate() const;
};

/// Adam moments (or nothing, for plain projected descent) over (lower, upper).
struct OptimizerState {
  Eigen::VectorXd m_lower, m_upper, v_lower, v_upper;
  long step = 0;
};

/// Centers c ~ Unif(−spread, spread), half-width w = fraction · B.
[[nodiscard]] BoxVariationalState initialize_box(const NetArchitecture &arch,
                                                 const TrainConfig &config, Rng &rng);

/// Clamps onto [−B, B] and enforces upper − lower ≥ min_gap. Feasible
/// states are left untouched.
void project_box(BoxVariationalState &state, double min_gap);

/// Throws DegenerateBox / OutOfSupport when the state is infeasible.
void validate_box(const BoxVariationalState &state);

struct BoxGradient {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Exact gradient of Σ log(2B/(upper − lower)).
[[nodiscard]] BoxGradient kl_gradient(const BoxVariationalState &state);

struct ObjectiveEstimate {
  double expected_nll = 0.0; // Monte Carlo average of −log q
  double kl = 0.0;
  double total = 0.0;
  BoxGradient gradient;
};

/// Reparameterized objective with fixed base draws: θ_v = lower + z_v ⊙ (upper − lower),
/// z_v the columns of base (p × V, entries in [0,1)).
[[nodiscard]] ObjectiveEstimate reparameterized_objective(
    const Network &net, const BoxVariationalState &state,
    const LikelihoodAdapter &adapter, const Eigen::MatrixXd &base);

struct StepResult {
  BoxVariationalState state;
  OptimizerState optimizer;
  double objective_estimate = 0.0;
};

/// One reparameterized gradient step followed by projection.
[[nodiscard]] StepResult elbo_gradient_step(const Network &net, BoxVariationalState state,
                                            const LikelihoodAdapter &adapter,
                                            int mc_samples, const TrainConfig &config,
                                            OptimizerState optimizer, Rng &rng);

/// Objective with the KL exact and the expected NLL averaged over V draws.
[[nodiscard]] ElboBreakdown evaluate_objective(const Network &net,
                                               const BoxVariationalState &state,
                                               const LikelihoodAdapter &adapter,
                                               int samples, std::uint64_t seed);

struct BoxFit {
  BoxVariationalState state;
  ElboBreakdown elbo;
  std::vector<double> trace; // mean objective estimate per epoch
};

[[nodiscard]] BoxFit fit_model(const NetArchitecture &arch, const LikelihoodAdapter &adapter,
                               const TrainConfig &config);

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd std_error;
};

/// Posterior mean of the network output: model index ~ γ, θ ~ its box,
/// averaged over draws. The same θ draws are used for every input.
[[nodiscard]] Prediction posterior_mean_predict(const CombinedPosterior &combined,
                                                const InputMatrix &inputs, int draws,
                                                Rng &rng);

/// Same, for a single box posterior.
[[nodiscard]] Prediction posterior_mean_predict(const BoxVariationalState &state,
                                                const InputMatrix &inputs, int draws,
                                                Rng &rng);

/// α_(K,M) ∝ exp(−b0 (KM)² log n) over an architecture grid.
[[nodiscard]] ModelCollection architecture_collection(const std::vector<NetArchitecture> &grid,
                                                      double b0, std::size_t n);

} // namespace avb::deep
