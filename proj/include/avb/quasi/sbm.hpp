#pragma once

#include "avb/core/elbo.hpp"
#include "avb/core/model_collection.hpp"
#include "avb/core/rng.hpp"
#include "avb/core/divergence.hpp"
#include "avb/quasi/sbm_state.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace avb::quasi {

/// Undirected simple graph. Stored as a symmetric 0/1 matrix with zero
/// diagonal; only the i > j entries carry information.
class SbmData {
public:
  SbmData() = default;
  /// Any square 0/1 matrix; the strict lower triangle is used and mirrored.
  explicit SbmData(const Eigen::MatrixXd &adjacency);
  /// Edge list of 0-based pairs; order within a pair is irrelevant.
  static SbmData from_edges(int n, const std::vector<std::pair<int, int>> &edges);

  [[nodiscard]] int nodes() const noexcept { return static_cast<int>(y_.rows()); }
  [[nodiscard]] std::size_t pair_count() const noexcept {
    const auto n = static_cast<std::size_t>(nodes());
    return n * (n - 1) / 2;
  }
  [[nodiscard]] const Eigen::MatrixXd &adjacency() const noexcept { return y_; }
  [[nodiscard]] double operator()(int i, int j) const { return y_(i, j); }
  [[nodiscard]] std::vector<std::pair<int, int>> edges() const;

private:
  Eigen::MatrixXd y_;
};

struct SbmModelSpec {
  int communities = 1;
  [[nodiscard]] std::string id() const { return "m" + std::to_string(communities); }
};

/// α_m ∝ exp(−b0 (m² log n + n log m)), m = 1..max_m.
[[nodiscard]] ModelCollection sbm_collection(int max_m, int n, double b0);
[[nodiscard]] ModelCollection sbm_collection(const std::vector<int> &sizes, int n, double b0);

/// −Σ_{i>j} (Y_ij − z_iᵀ U z_j)² for a symmetric U (m × m) and one-hot Z (n × m).
[[nodiscard]] double sbm_quasi_loglik(const SbmData &data, const Eigen::MatrixXd &connectivity,
                                      const Eigen::MatrixXd &labels_one_hot);

/// Same with integer labels.
[[nodiscard]] double sbm_quasi_loglik(const SbmData &data, const Eigen::MatrixXd &connectivity,
                                      const std::vector<int> &labels);

/// Exact objective: E_q[Σ (Y − Ω)²] + KL over intervals and labels.
[[nodiscard]] ElboBreakdown sbm_objective(const SbmData &data, const SbmVariationalState &state);

struct SbmFitConfig {
  int max_iters = 200;
  double tol = 1e-9;          // relative objective change per sweep
  int restarts = 10;
  int interval_steps = 50;    // projected-gradient steps per sweep
  double min_gap = 1e-6;
  std::uint64_t seed = 0;
};

struct SbmFit {
  SbmVariationalState state;
  ElboBreakdown elbo;
  std::vector<double> trace; // objective after initialization and after every sweep
  int iterations = 0;
  bool converged = false;
};

/// Closed-form label updates (sequential over nodes) then projected-gradient
/// interval updates, from a given starting state. Nonincreasing per sweep.
[[nodiscard]] SbmFit sbm_refine(const SbmData &data, SbmVariationalState state,
                                const SbmFitConfig &config);

/// Best of config.restarts random label initializations; communities are
/// reported in decreasing order of expected size.
[[nodiscard]] SbmFit sbm_fit(const SbmData &data, const SbmModelSpec &spec,
                             const SbmFitConfig &config);

/// Reorders communities by decreasing Σ_i ν_ik (stable).
[[nodiscard]] SbmVariationalState sort_communities(SbmVariationalState state);

/// Hard labels argmax_k ν_ik (lowest k on ties).
[[nodiscard]] std::vector<int> map_labels(const SbmVariationalState &state);

/// Fraction of agreeing labels, maximized over relabelings.
[[nodiscard]] double label_accuracy(const std::vector<int> &truth, const std::vector<int> &estimate);

struct PlantedGraph {
  SbmData data;
  std::vector<int> labels;
};

/// Balanced blocks (node i in block ⌊i·blocks/n⌋), edge probability p_in
/// within and p_out across blocks.
[[nodiscard]] PlantedGraph planted_partition(int n, int blocks, double p_in, double p_out,
                                             Rng &rng);

/// E_{Y~Bern(Ω₀)}[q(Ω₁)/q(Ω₀)] computed exactly against exp(−½ Σ(Ω₀−Ω₁)²).
/// Inputs are edge vectors of length n̄.
[[nodiscard]] BoundCheck sbm_learning_inequality_check(const Eigen::VectorXd &omega0,
                                                       const Eigen::VectorXd &omega1);

/// E_{Bern(Ω₀)}[(q(Ω₀)/q(Ω₁))^ϱ] against exp(ϱ(ϱ+2)/2 · Σ(Ω₀−Ω₁)²).
[[nodiscard]] BoundCheck sbm_moment_bound_check(const Eigen::VectorXd &omega0,
                                                const Eigen::VectorXd &omega1, double rho);

} // namespace avb::quasi
