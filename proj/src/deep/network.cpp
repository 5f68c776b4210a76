#include "avb/deep/network.hpp"

#include "avb/core/errors.hpp"

#include <cmath>

namespace avb::deep {

namespace {
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajor>;
using Weights = Eigen::Map<RowMajor>;
} // namespace

void NetArchitecture::validate() const {
  if (depth < 2)
    throw ConfigError("network depth must be at least 2");
  if (width < 1 || input_dim < 1)
    throw ConfigError("network width and input dimension must be positive");
  if (!(bound > 0.0) || !std::isfinite(bound))
    throw ConfigError("magnitude bound must be positive");
}

Network::Network(NetArchitecture arch) : arch_(arch) {
  arch_.validate();
  int in = arch_.input_dim;
  std::size_t offset = 0;
  for (int k = 0; k < arch_.depth; ++k) {
    const int out = k + 1 == arch_.depth ? 1 : arch_.width;
    layers_.push_back({offset, in, out});
    offset += static_cast<std::size_t>(out) * static_cast<std::size_t>(in + 1);
    in = out;
  }
  count_ = offset;
}

void Network::check(const Eigen::Ref<const Eigen::VectorXd> &theta,
                    Eigen::Index rows) const {
  if (static_cast<std::size_t>(theta.size()) != count_)
    throw ShapeError("parameter vector has length " + std::to_string(theta.size()) +
                     ", expected " + std::to_string(count_));
  if (rows != arch_.input_dim)
    throw ShapeError("input dimension " + std::to_string(rows) + ", expected " +
                     std::to_string(arch_.input_dim));
}

double Network::forward_point(const Eigen::Ref<const Eigen::VectorXd> &theta,
                              const Eigen::Ref<const Eigen::VectorXd> &x) const {
  InputMatrix single = x;
  return forward(theta, single)(0);
}

Eigen::VectorXd Network::forward(const Eigen::Ref<const Eigen::VectorXd> &theta,
                                 const InputMatrix &inputs) const {
  check(theta, inputs.rows());
  Eigen::MatrixXd act = inputs;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto &L = layers_[k];
    ConstWeights w(theta.data() + L.offset, L.out, L.in);
    Eigen::Map<const Eigen::VectorXd> b(theta.data() + L.offset + L.out * L.in, L.out);
    Eigen::MatrixXd z = w * act;
    z.colwise() += b;
    if (k + 1 < layers_.size())
      act = z.cwiseMax(0.0);
    else
      act = std::move(z);
  }
  return act.row(0).transpose();
}

double Network::forward_backward(const Eigen::Ref<const Eigen::VectorXd> &theta,
                                 const InputMatrix &inputs, const SeedFn &seed_fn,
                                 Eigen::Ref<Eigen::VectorXd> grad) const {
  check(theta, inputs.rows());
  if (grad.size() != theta.size())
    throw ShapeError("gradient buffer has wrong length");
  std::vector<Eigen::MatrixXd> acts;   // input of each layer
  std::vector<Eigen::MatrixXd> pre;    // pre-activation of hidden layers
  acts.reserve(layers_.size());
  pre.reserve(layers_.size());
  acts.push_back(inputs);
  Eigen::MatrixXd out;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto &L = layers_[k];
    ConstWeights w(theta.data() + L.offset, L.out, L.in);
    Eigen::Map<const Eigen::VectorXd> b(theta.data() + L.offset + L.out * L.in, L.out);
    Eigen::MatrixXd z = w * acts.back();
    z.colwise() += b;
    if (k + 1 < layers_.size()) {
      acts.push_back(z.cwiseMax(0.0));
      pre.push_back(std::move(z));
    } else {
      out = std::move(z);
    }
  }
  const Eigen::VectorXd outputs = out.row(0).transpose();
  Eigen::VectorXd seed;
  const double value = seed_fn(outputs, seed);
  if (seed.size() != inputs.cols())
    throw ShapeError("seed length differs from input count");
  Eigen::MatrixXd delta = seed.transpose(); // 1 × n
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto &L = layers_[k];
    Weights gw(grad.data() + L.offset, L.out, L.in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + L.offset + L.out * L.in, L.out);
    gw.noalias() += delta * acts[k].transpose();
    gb += delta.rowwise().sum();
    if (k > 0) {
      ConstWeights w(theta.data() + L.offset, L.out, L.in);
      Eigen::MatrixXd back = w.transpose() * delta;
      delta = back.cwiseProduct((pre[k - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return value;
}

double Network::lipschitz_bound() const {
  const double k = arch_.depth;
  return k * std::pow(arch_.bound * (arch_.width + 1.0), k);
}

} // namespace avb::deep
