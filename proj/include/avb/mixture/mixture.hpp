#pragma once

#include "avb/core/combine.hpp"
#include "avb/core/elbo.hpp"
#include "avb/core/model_collection.hpp"
#include "avb/core/rng.hpp"
#include "avb/mixture/mixture_state.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace avb::mixture {

/// Gaussian location-scale mixture with m components in d dimensions:
/// ϑ_k ~ N(μ0, Σ0), Λ_k = Σ_k⁻¹ ~ Wishart(ν0, W0), ϖ ~ Dir(a0 𝟙).
struct MixtureModelSpec {
  int components = 1;
  int dim = 2;
  Eigen::VectorXd mean_prior_mean;
  Eigen::MatrixXd mean_prior_cov;
  double wishart_dof = 10.0;
  Eigen::MatrixXd wishart_scale;
  double dirichlet_concentration = 1.0;

  /// N(0, 100 I), Wishart(10, 0.1 I), Dir(1).
  static MixtureModelSpec standard(int components, int dim);
  void validate() const;
};

struct CaviConfig {
  int max_iters = 500;
  double tol = 1e-6; // relative change of the objective
  int restarts = 5;
  std::uint64_t seed = 0;
};

struct MixtureFit {
  MixtureVariationalState state;
  ElboBreakdown elbo;
  std::vector<double> trace; // objective after each sweep (first entry: initial state)
  int iterations = 0;
  bool converged = false;
};

/// Exact objective: expected negative complete-data log-likelihood plus
/// KL(q(z, ϖ, ϑ, Λ) ‖ prior).
[[nodiscard]] ElboBreakdown mixture_objective(const MixtureModelSpec &spec,
                                              const Eigen::MatrixXd &data,
                                              const MixtureVariationalState &state);

/// k-means++ seeding: hard responsibilities to D²-sampled seeds, factors
/// filled from those responsibilities.
[[nodiscard]] MixtureVariationalState kmeanspp_init(const MixtureModelSpec &spec,
                                                    const Eigen::MatrixXd &data, Rng &rng);

/// Coordinate ascent from init until the relative objective change drops
/// below tol. Sweep order: Dirichlet, means, precisions, responsibilities.
[[nodiscard]] MixtureFit cavi_fit(const MixtureModelSpec &spec, const Eigen::MatrixXd &data,
                                  const MixtureVariationalState &init, int max_iters,
                                  double tol);

/// Best-objective fit over config.restarts k-means++ starts.
[[nodiscard]] MixtureFit fit_mixture(const MixtureModelSpec &spec, const Eigen::MatrixXd &data,
                                     const CaviConfig &config);

struct TruthSample {
  Eigen::MatrixXd data;     // n × 2
  std::vector<int> labels;  // generating component per row
};

/// Draws from the four-component planar truth.
[[nodiscard]] TruthSample sample_truth(std::size_t n, std::uint64_t seed);

/// Density of the four-component truth at each grid row.
[[nodiscard]] Eigen::VectorXd truth_density(const Eigen::MatrixXd &grid);

/// Plug-in density at posterior-mean weights, means, and precisions.
[[nodiscard]] Eigen::VectorXd predictive_density(const MixtureVariationalState &state,
                                                 const Eigen::MatrixXd &grid);

/// Σ_m γ_m · plug-in density of model m.
[[nodiscard]] Eigen::VectorXd predictive_density(const CombinedPosterior &combined,
                                                 const Eigen::MatrixXd &grid);

/// Models m = 1..max_components with Π(m) ∝ exp(−m log m).
[[nodiscard]] ModelCollection component_collection(int max_components);

/// Same prior over an explicit list of component counts.
[[nodiscard]] ModelCollection component_collection(const std::vector<int> &sizes);

/// "m<k>" for a component count.
[[nodiscard]] std::string model_id(int components);

} // namespace avb::mixture
