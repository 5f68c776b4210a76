#include "avb/deep/variational.hpp"

#include "avb/core/divergence.hpp"
#include "avb/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace avb::deep {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

Eigen::MatrixXd draw_base(Eigen::Index p, int samples, Rng &rng) {
  Eigen::MatrixXd z(p, samples);
  for (Eigen::Index v = 0; v < samples; ++v)
    for (Eigen::Index j = 0; j < p; ++j)
      z(j, v) = uniform01(rng);
  return z;
}

void adam_update(Eigen::VectorXd &x, const Eigen::VectorXd &g, Eigen::VectorXd &m,
                 Eigen::VectorXd &v, long t, double lr) {
  if (m.size() != x.size()) {
    m.setZero(x.size());
    v.setZero(x.size());
  }
  m = kBeta1 * m + (1.0 - kBeta1) * g;
  v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
  x.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEps);
}

} // namespace

OptimizerKind parse_optimizer(const std::string &name) {
  if (name == "adam")
    return OptimizerKind::adam;
  if (name == "projected_gd" || name == "gd")
    return OptimizerKind::projected_gd;
  throw ConfigError("unknown optimizer '" + name + "'");
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? "adam" : "projected_gd";
}

void TrainConfig::validate() const {
  if (epochs < 0)
    throw ConfigError("epochs must be nonnegative");
  if (!(learning_rate >= 0.0))
    throw ConfigError("learning rate must be nonnegative");
  if (mc_samples < 1 || eval_samples < 1)
    throw ConfigError("Monte Carlo sample counts must be positive");
  if (!(min_gap_fraction > 0.0 && min_gap_fraction < 1.0))
    throw ConfigError("minimum gap fraction must lie in (0, 1)");
}

BoxVariationalState initialize_box(const NetArchitecture &arch, const TrainConfig &config,
                                   Rng &rng) {
  const auto p = static_cast<Eigen::Index>(arch.parameter_count());
  BoxVariationalState state{arch, Eigen::VectorXd(p), Eigen::VectorXd(p)};
  const double w = config.init_half_width_fraction * arch.bound;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double c = config.init_center_spread * (2.0 * uniform01(rng) - 1.0);
    state.lower(j) = c - w;
    state.upper(j) = c + w;
  }
  project_box(state, config.min_gap_fraction * arch.bound);
  return state;
}

void project_box(BoxVariationalState &state, double min_gap) {
  const double b = state.arch.bound;
  for (Eigen::Index j = 0; j < state.size(); ++j) {
    double lo = std::clamp(state.lower(j), -b, b);
    double hi = std::clamp(state.upper(j), -b, b);
    if (hi - lo < min_gap) {
      const double mid = std::clamp(0.5 * (lo + hi), -b + 0.5 * min_gap, b - 0.5 * min_gap);
      lo = mid - 0.5 * min_gap;
      hi = mid + 0.5 * min_gap;
    }
    state.lower(j) = lo;
    state.upper(j) = hi;
  }
}

void validate_box(const BoxVariationalState &state) {
  if (state.lower.size() != state.upper.size() ||
      static_cast<std::size_t>(state.lower.size()) != state.arch.parameter_count())
    throw ShapeError("box state does not match its architecture");
  (void)kl_uniform_box(state.lower, state.upper, state.arch.bound);
}

BoxGradient kl_gradient(const BoxVariationalState &state) {
  const Eigen::ArrayXd inv = (state.upper - state.lower).array().inverse();
  return {inv.matrix(), (-inv).matrix()};
}

ObjectiveEstimate reparameterized_objective(const Network &net,
                                            const BoxVariationalState &state,
                                            const LikelihoodAdapter &adapter,
                                            const Eigen::MatrixXd &base) {
  const Eigen::Index p = state.size();
  if (base.rows() != p || base.cols() < 1)
    throw ShapeError("base draws must be p × V with V ≥ 1");
  const auto samples = static_cast<double>(base.cols());
  const Eigen::VectorXd width = state.upper - state.lower;
  ObjectiveEstimate out;
  out.gradient = kl_gradient(state);
  Eigen::VectorXd grad(p);
  for (Eigen::Index v = 0; v < base.cols(); ++v) {
    const Eigen::VectorXd theta = state.lower + base.col(v).cwiseProduct(width);
    grad.setZero();
    const double ll = log_likelihood_gradient(adapter, net, theta, grad);
    if (!grad.allFinite())
      throw NonFiniteObjective("non-finite likelihood gradient at Monte Carlo draw " +
                               std::to_string(v));
    out.expected_nll -= ll / samples;
    // d theta / d lower = 1 − z, d theta / d upper = z
    out.gradient.lower.array() -= grad.array() * (1.0 - base.col(v).array()) / samples;
    out.gradient.upper.array() -= grad.array() * base.col(v).array() / samples;
  }
  out.kl = kl_uniform_box(state.lower, state.upper, state.arch.bound);
  out.total = out.expected_nll + out.kl;
  return out;
}

StepResult elbo_gradient_step(const Network &net, BoxVariationalState state,
                              const LikelihoodAdapter &adapter, int mc_samples,
                              const TrainConfig &config, OptimizerState optimizer,
                              Rng &rng) {
  if (mc_samples < 1)
    throw ConfigError("need at least one Monte Carlo sample per step");
  const Eigen::MatrixXd base = draw_base(state.size(), mc_samples, rng);
  ObjectiveEstimate est = reparameterized_objective(net, state, adapter, base);
  ++optimizer.step;
  if (config.optimizer == OptimizerKind::adam) {
    adam_update(state.lower, est.gradient.lower, optimizer.m_lower, optimizer.v_lower,
                optimizer.step, config.learning_rate);
    adam_update(state.upper, est.gradient.upper, optimizer.m_upper, optimizer.v_upper,
                optimizer.step, config.learning_rate);
  } else {
    state.lower -= config.learning_rate * est.gradient.lower;
    state.upper -= config.learning_rate * est.gradient.upper;
  }
  project_box(state, config.min_gap_fraction * state.arch.bound);
  return {std::move(state), std::move(optimizer), est.total};
}

ElboBreakdown evaluate_objective(const Network &net, const BoxVariationalState &state,
                                 const LikelihoodAdapter &adapter, int samples,
                                 std::uint64_t seed) {
  validate_box(state);
  Rng rng = make_rng(seed);
  const Eigen::VectorXd width = state.upper - state.lower;
  double nll = 0.0;
  for (int v = 0; v < samples; ++v) {
    Eigen::VectorXd theta(state.size());
    for (Eigen::Index j = 0; j < state.size(); ++j)
      theta(j) = state.lower(j) + uniform01(rng) * width(j);
    nll -= log_likelihood(adapter, net, theta);
  }
  nll /= samples;
  const double kl = kl_uniform_box(state.lower, state.upper, state.arch.bound);
  return ElboBreakdown::make(nll, kl, static_cast<std::size_t>(samples), seed);
}

BoxFit fit_model(const NetArchitecture &arch, const LikelihoodAdapter &adapter,
                 const TrainConfig &config) {
  config.validate();
  const Network net(arch);
  if (adapter.input_dim() != arch.input_dim)
    throw ShapeError("adapter input dimension differs from the architecture");
  Rng rng = make_rng(config.seed, {stable_hash("train")});
  BoxFit fit;
  fit.state = initialize_box(arch, config, rng);
  OptimizerState optimizer;
  const std::size_t units = adapter.unit_count();
  const bool batched = config.batch_size > 0 && units > config.batch_size;
  std::vector<std::size_t> order(units);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double sum = 0.0;
    int steps = 0;
    if (batched) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < units; start += config.batch_size) {
        const std::size_t stop = std::min(units, start + config.batch_size);
        const auto batch = adapter.minibatch(
            std::span<const std::size_t>(order.data() + start, stop - start));
        auto step = elbo_gradient_step(net, std::move(fit.state), batch, config.mc_samples,
                                       config, std::move(optimizer), rng);
        fit.state = std::move(step.state);
        optimizer = std::move(step.optimizer);
        sum += step.objective_estimate;
        ++steps;
      }
    } else {
      auto step = elbo_gradient_step(net, std::move(fit.state), adapter, config.mc_samples,
                                     config, std::move(optimizer), rng);
      fit.state = std::move(step.state);
      optimizer = std::move(step.optimizer);
      sum += step.objective_estimate;
      ++steps;
    }
    fit.trace.push_back(sum / steps);
  }
  const std::uint64_t eval_seed =
      make_rng(config.seed, {stable_hash("evaluate")})();
  fit.elbo = evaluate_objective(net, fit.state, adapter, config.eval_samples, eval_seed);
  return fit;
}

namespace {

Eigen::VectorXd draw_from_box(const BoxVariationalState &state, Rng &rng) {
  Eigen::VectorXd theta(state.size());
  for (Eigen::Index j = 0; j < state.size(); ++j)
    theta(j) = state.lower(j) + uniform01(rng) * (state.upper(j) - state.lower(j));
  return theta;
}

Prediction summarize(const Eigen::MatrixXd &outputs) {
  // outputs: inputs × draws
  const auto draws = static_cast<double>(outputs.cols());
  Prediction p;
  p.mean = outputs.rowwise().mean();
  if (outputs.cols() > 1) {
    const Eigen::MatrixXd centered = outputs.colwise() - p.mean;
    const Eigen::VectorXd var = centered.rowwise().squaredNorm() / (draws - 1.0);
    p.std_error = (var / draws).cwiseSqrt();
  } else {
    p.std_error.setZero(outputs.rows());
  }
  return p;
}

} // namespace

Prediction posterior_mean_predict(const CombinedPosterior &combined, const InputMatrix &inputs,
                                  int draws, Rng &rng) {
  if (draws < 1)
    throw ConfigError("need at least one posterior draw");
  std::vector<const BoxVariationalState *> boxes;
  for (const auto &id : combined.model_ids) {
    const auto *box = std::get_if<BoxVariationalState>(&combined.components.at(id));
    if (box == nullptr)
      throw ShapeError("component '" + id + "' is not a box posterior");
    boxes.push_back(box);
  }
  Eigen::MatrixXd outputs(inputs.cols(), draws);
  for (int d = 0; d < draws; ++d) {
    double u = uniform01(rng);
    std::size_t m = 0;
    while (m + 1 < boxes.size() && u >= combined.gamma(static_cast<Eigen::Index>(m))) {
      u -= combined.gamma(static_cast<Eigen::Index>(m));
      ++m;
    }
    const Network net(boxes[m]->arch);
    outputs.col(d) = net.forward(draw_from_box(*boxes[m], rng), inputs);
  }
  return summarize(outputs);
}

Prediction posterior_mean_predict(const BoxVariationalState &state, const InputMatrix &inputs,
                                  int draws, Rng &rng) {
  if (draws < 1)
    throw ConfigError("need at least one posterior draw");
  const Network net(state.arch);
  Eigen::MatrixXd outputs(inputs.cols(), draws);
  for (int d = 0; d < draws; ++d)
    outputs.col(d) = net.forward(draw_from_box(state, rng), inputs);
  return summarize(outputs);
}

ModelCollection architecture_collection(const std::vector<NetArchitecture> &grid, double b0,
                                        std::size_t n) {
  if (grid.empty())
    throw ConfigError("architecture grid is empty");
  if (n < 2)
    throw ConfigError("sample size must be at least 2");
  const double logn = std::log(static_cast<double>(n));
  std::vector<ModelEntry> entries;
  for (const auto &arch : grid) {
    arch.validate();
    const double km = static_cast<double>(arch.depth) * arch.width;
    entries.push_back({arch.id(), "Unif(-B,B)^p, B=" + std::to_string(arch.bound),
                       km * std::sqrt(logn / static_cast<double>(n))});
  }
  return ModelCollection::from_complexity(std::move(entries), b0, 1.0,
                                          static_cast<double>(n));
}

} // namespace avb::deep
