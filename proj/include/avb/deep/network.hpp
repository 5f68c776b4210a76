#pragma once

#include "avb/deep/box_state.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <vector>

namespace avb::deep {

/// Evaluation points are stored column-wise: d × n.
using InputMatrix = Eigen::MatrixXd;

/// Forward and reverse passes of a bounded ReLU network over a flat
/// parameter vector. Layer k stores W_k (row-major, out × in) then b_k.
class Network {
public:
  explicit Network(NetArchitecture arch);

  [[nodiscard]] const NetArchitecture &architecture() const noexcept { return arch_; }
  [[nodiscard]] std::size_t parameter_count() const noexcept { return count_; }

  /// net(θ)(x) at a single point.
  [[nodiscard]] double forward_point(const Eigen::Ref<const Eigen::VectorXd> &theta,
                                     const Eigen::Ref<const Eigen::VectorXd> &x) const;

  /// net(θ) at every column of inputs.
  [[nodiscard]] Eigen::VectorXd forward(const Eigen::Ref<const Eigen::VectorXd> &theta,
                                        const InputMatrix &inputs) const;

  /// Maps the outputs to reverse-pass seeds; returns the scalar it computed.
  using SeedFn = std::function<double(const Eigen::VectorXd &outputs, Eigen::VectorXd &seed)>;

  /// Adds Σ_i seed_i ∇_θ net(θ)(x_i) to grad, with seeds chosen from the
  /// outputs of the same pass. Returns whatever seed_fn returned.
  double forward_backward(const Eigen::Ref<const Eigen::VectorXd> &theta,
                          const InputMatrix &inputs, const SeedFn &seed_fn,
                          Eigen::Ref<Eigen::VectorXd> grad) const;

  /// Sup-norm Lipschitz constant K(B(M+1))^K of θ ↦ net(θ) on the unit cube.
  [[nodiscard]] double lipschitz_bound() const;

  struct Layer {
    std::size_t offset; // start of W in the flat vector; b follows W
    int in;
    int out;
  };
  [[nodiscard]] const std::vector<Layer> &layers() const noexcept { return layers_; }

private:
  void check(const Eigen::Ref<const Eigen::VectorXd> &theta, Eigen::Index rows) const;

  NetArchitecture arch_;
  std::vector<Layer> layers_;
  std::size_t count_ = 0;
};

} // namespace avb::deep
