#include "avb/deep/likelihood.hpp"

#include "avb/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace avb::deep {

namespace {

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

void check_regression(const InputMatrix &x, const Eigen::VectorXd &y) {
  if (x.cols() == 0)
    throw ShapeError("regression data is empty");
  if (x.cols() != y.size())
    throw ShapeError("input and target counts differ");
}

InputMatrix select_columns(const InputMatrix &x, std::span<const std::size_t> idx) {
  InputMatrix out(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = x.col(static_cast<Eigen::Index>(idx[i]));
  return out;
}

Eigen::VectorXd select_rows(const Eigen::VectorXd &v, std::span<const std::size_t> idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  return out;
}

} // namespace

InputMatrix midpoint_grid(int dim, int resolution) {
  if (dim < 1 || resolution < 2)
    throw ConfigError("quadrature grid needs dim ≥ 1 and at least 2 nodes per axis");
  Eigen::Index total = 1;
  for (int k = 0; k < dim; ++k)
    total *= resolution;
  InputMatrix grid(dim, total);
  for (Eigen::Index c = 0; c < total; ++c) {
    Eigen::Index rem = c;
    for (int k = 0; k < dim; ++k) {
      grid(k, c) = (static_cast<double>(rem % resolution) + 0.5) / resolution;
      rem /= resolution;
    }
  }
  return grid;
}

LikelihoodAdapter::LikelihoodAdapter(Model model) : model_(std::move(model)) {
  std::visit(
      overloaded{
          [&](const GaussianRegression &m) {
            check_regression(m.inputs, m.targets);
            points_ = m.inputs;
          },
          [&](const QuasiGaussianRegression &m) {
            check_regression(m.inputs, m.targets);
            if (!(m.learning_rate > 0.0))
              throw ConfigError("learning rate must be positive");
            points_ = m.inputs;
          },
          [&](const BernoulliClassification &m) {
            check_regression(m.inputs, m.labels);
            if (!(m.truncation > 0.0 && m.truncation < 0.5))
              throw ConfigError("truncation must lie in (0, 1/2)");
            for (Eigen::Index i = 0; i < m.labels.size(); ++i)
              if (m.labels(i) != 0.0 && m.labels(i) != 1.0)
                throw ShapeError("classification labels must be 0 or 1");
            points_ = m.inputs;
          },
          [&](const PoissonProcess &m) {
            if (m.realizations.empty())
              throw ShapeError("point process needs at least one realization");
            if (!(m.intensity_min > 0.0 && m.intensity_min < m.intensity_max))
              throw ConfigError("intensity bounds must satisfy 0 < min < max");
            Eigen::Index count = 0;
            for (const auto &r : m.realizations) {
              if (r.cols() > 0 && r.rows() != m.dim)
                throw ShapeError("point dimension differs from process dimension");
              count += r.cols();
            }
            const InputMatrix grid = midpoint_grid(m.dim, m.resolution);
            points_.resize(m.dim, count + grid.cols());
            Eigen::Index c = 0;
            for (const auto &r : m.realizations)
              for (Eigen::Index j = 0; j < r.cols(); ++j)
                points_.col(c++) = r.col(j);
            quadrature_offset_ = static_cast<std::size_t>(c);
            points_.rightCols(grid.cols()) = grid;
          },
      },
      model_);
}

std::string LikelihoodAdapter::tag() const {
  return std::visit(overloaded{
                        [](const GaussianRegression &) { return std::string("gaussian_regression"); },
                        [](const QuasiGaussianRegression &) { return std::string("quasi_regression"); },
                        [](const BernoulliClassification &) { return std::string("bernoulli_classification"); },
                        [](const PoissonProcess &) { return std::string("poisson_process"); },
                    },
                    model_);
}

double LikelihoodAdapter::evaluate(const Eigen::Ref<const Eigen::VectorXd> &f,
                                   Eigen::VectorXd *d_out) const {
  if (f.size() != points_.cols())
    throw ShapeError("output count differs from evaluation points");
  if (d_out != nullptr)
    d_out->setZero(f.size());
  const double value = std::visit(
      overloaded{
          [&](const GaussianRegression &m) {
            const Eigen::VectorXd r = m.targets - f;
            if (d_out != nullptr)
              *d_out = r;
            const double n = static_cast<double>(r.size());
            return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * r.squaredNorm();
          },
          [&](const QuasiGaussianRegression &m) {
            const Eigen::VectorXd r = m.targets - f;
            if (d_out != nullptr)
              *d_out = m.learning_rate * r;
            return -0.5 * m.learning_rate * r.squaredNorm();
          },
          [&](const BernoulliClassification &m) {
            const double lo = m.truncation, hi = 1.0 - m.truncation;
            double ll = 0.0;
            for (Eigen::Index i = 0; i < f.size(); ++i) {
              const double w = std::clamp(f(i), lo, hi);
              const double y = m.labels(i);
              ll += y * std::log(w) + (1.0 - y) * std::log1p(-w);
              if (d_out != nullptr && f(i) >= lo && f(i) <= hi)
                (*d_out)(i) = y / w - (1.0 - y) / (1.0 - w);
            }
            return ll;
          },
          [&](const PoissonProcess &m) {
            const auto q0 = static_cast<Eigen::Index>(quadrature_offset_);
            const Eigen::Index nodes = f.size() - q0;
            const double reps = static_cast<double>(m.realizations.size());
            double ll = 0.0;
            for (Eigen::Index i = 0; i < q0; ++i) {
              const double lam = std::clamp(f(i), m.intensity_min, m.intensity_max);
              ll += std::log(lam);
              if (d_out != nullptr && f(i) >= m.intensity_min && f(i) <= m.intensity_max)
                (*d_out)(i) = 1.0 / lam;
            }
            double integral = 0.0;
            for (Eigen::Index i = q0; i < f.size(); ++i) {
              integral += std::clamp(f(i), m.intensity_min, m.intensity_max);
              if (d_out != nullptr && f(i) >= m.intensity_min && f(i) <= m.intensity_max)
                (*d_out)(i) = -reps / static_cast<double>(nodes);
            }
            integral /= static_cast<double>(nodes);
            return ll - reps * (integral - 1.0);
          },
      },
      model_);
  if (!std::isfinite(value))
    throw NonFiniteObjective("non-finite log-likelihood (" + tag() + ")");
  if (d_out != nullptr)
    *d_out *= scale_;
  return scale_ * value;
}

std::size_t LikelihoodAdapter::unit_count() const noexcept {
  return std::visit(overloaded{
                        [](const PoissonProcess &) -> std::size_t { return 0; },
                        [this](const auto &) -> std::size_t {
                          return static_cast<std::size_t>(points_.cols());
                        },
                    },
                    model_);
}

LikelihoodAdapter LikelihoodAdapter::minibatch(std::span<const std::size_t> units) const {
  const std::size_t total = unit_count();
  if (total == 0 || units.empty())
    return *this;
  Model sub = std::visit(
      overloaded{
          [&](const GaussianRegression &m) -> Model {
            return GaussianRegression{select_columns(m.inputs, units), select_rows(m.targets, units)};
          },
          [&](const QuasiGaussianRegression &m) -> Model {
            return QuasiGaussianRegression{select_columns(m.inputs, units),
                                           select_rows(m.targets, units), m.learning_rate,
                                           m.variance_proxy};
          },
          [&](const BernoulliClassification &m) -> Model {
            return BernoulliClassification{select_columns(m.inputs, units),
                                           select_rows(m.labels, units), m.truncation};
          },
          [&](const PoissonProcess &m) -> Model { return m; },
      },
      model_);
  LikelihoodAdapter out(std::move(sub));
  out.scale_ = scale_ * static_cast<double>(total) / static_cast<double>(units.size());
  return out;
}

double log_likelihood(const LikelihoodAdapter &adapter, const Network &net,
                      const Eigen::Ref<const Eigen::VectorXd> &theta) {
  const Eigen::VectorXd f = net.forward(theta, adapter.evaluation_points());
  if (!f.allFinite())
    throw NonFiniteObjective("non-finite network output");
  return adapter.evaluate(f);
}

double log_likelihood_gradient(const LikelihoodAdapter &adapter, const Network &net,
                               const Eigen::Ref<const Eigen::VectorXd> &theta,
                               Eigen::Ref<Eigen::VectorXd> grad) {
  return net.forward_backward(
      theta, adapter.evaluation_points(),
      [&](const Eigen::VectorXd &f, Eigen::VectorXd &seed) {
        if (!f.allFinite())
          throw NonFiniteObjective("non-finite network output");
        return adapter.evaluate(f, &seed);
      },
      grad);
}

} // namespace avb::deep
