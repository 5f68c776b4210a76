#pragma once

#include "avb/deep/network.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace avb::deep {

/// y_i ~ N(f(x_i), 1).
struct GaussianRegression {
  InputMatrix inputs;     // d × n
  Eigen::VectorXd targets;
};

/// Tempered Gaussian quasi-likelihood exp(−κ/2 Σ (y_i − f(x_i))²).
struct QuasiGaussianRegression {
  InputMatrix inputs;
  Eigen::VectorXd targets;
  double learning_rate = 1.0;                 // κ > 0
  std::optional<double> variance_proxy;       // ς², validity check only

  /// κ < 1/ς² when ς² is known.
  [[nodiscard]] std::optional<bool> valid() const {
    if (!variance_proxy)
      return std::nullopt;
    return learning_rate < 1.0 / *variance_proxy;
  }
};

/// y_i ~ Bern(clamp(f(x_i), κ, 1−κ)).
struct BernoulliClassification {
  InputMatrix inputs;
  Eigen::VectorXd labels; // entries 0 or 1
  double truncation = 0.05;
};

/// Repeated realizations of a Poisson process on [0,1]^d with intensity
/// clamp(f, κ_min, κ_max); the integral uses a midpoint tensor grid.
struct PoissonProcess {
  std::vector<InputMatrix> realizations; // each d × (points)
  int dim = 1;
  double intensity_min = 0.01;
  double intensity_max = 100.0;
  int resolution = 64; // nodes per axis
};

/// Log-likelihood of a network's outputs under one of the supported models.
/// The network is evaluated at a fixed set of points (data inputs, plus the
/// quadrature grid for the point process).
class LikelihoodAdapter {
public:
  using Model = std::variant<GaussianRegression, QuasiGaussianRegression,
                             BernoulliClassification, PoissonProcess>;

  explicit LikelihoodAdapter(Model model);

  [[nodiscard]] const Model &model() const noexcept { return model_; }
  [[nodiscard]] std::string tag() const;
  [[nodiscard]] int input_dim() const noexcept { return static_cast<int>(points_.rows()); }

  /// Columns where the network must be evaluated.
  [[nodiscard]] const InputMatrix &evaluation_points() const noexcept { return points_; }

  /// log q(outputs); writes d log q / d output into d_outputs when given.
  [[nodiscard]] double evaluate(const Eigen::Ref<const Eigen::VectorXd> &outputs,
                                Eigen::VectorXd *d_outputs = nullptr) const;

  /// Independent data units available for mini-batching (0: not batchable).
  [[nodiscard]] std::size_t unit_count() const noexcept;

  /// Adapter over a subset of units with the log-likelihood scaled by
  /// unit_count / |units| (unbiased for the full-data value).
  [[nodiscard]] LikelihoodAdapter minibatch(std::span<const std::size_t> units) const;

  /// Multiplier applied to the log-likelihood (1 for full data).
  [[nodiscard]] double scale() const noexcept { return scale_; }

private:
  Model model_;
  InputMatrix points_;
  double scale_ = 1.0;
  std::size_t quadrature_offset_ = 0; // first quadrature column (point process)
};

/// Midpoint tensor grid on [0,1]^dim with resolution nodes per axis.
[[nodiscard]] InputMatrix midpoint_grid(int dim, int resolution);

/// log q_n(net(θ), Y).
[[nodiscard]] double log_likelihood(const LikelihoodAdapter &adapter, const Network &net,
                                    const Eigen::Ref<const Eigen::VectorXd> &theta);

/// log q_n and its gradient in θ.
double log_likelihood_gradient(const LikelihoodAdapter &adapter, const Network &net,
                               const Eigen::Ref<const Eigen::VectorXd> &theta,
                               Eigen::Ref<Eigen::VectorXd> grad);

} // namespace avb::deep
