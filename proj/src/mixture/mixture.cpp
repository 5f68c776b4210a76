#include "avb/mixture/mixture.hpp"

#include "avb/core/errors.hpp"
#include "avb/core/numeric.hpp"

#include <Eigen/Cholesky>
#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <numbers>
#include <string>

namespace avb::mixture {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_det_spd(const Eigen::MatrixXd &a, std::size_t iteration, const char *what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericalBreakdown(std::string(what) + " is not positive definite", iteration);
  const Eigen::MatrixXd l = llt.matrixL();
  return 2.0 * l.diagonal().array().log().sum();
}

Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd &a, std::size_t iteration, const char *what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericalBreakdown(std::string(what) + " is not positive definite", iteration);
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  return 0.5 * (inv + inv.transpose());
}

double log_multigamma(double a, int d) {
  double out = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= d; ++j)
    out += std::lgamma(a + 0.5 * (1 - j));
  return out;
}

double expected_log_det(const WishartFactor &w, std::size_t iteration) {
  const int d = static_cast<int>(w.scale.rows());
  double out = d * std::log(2.0) + log_det_spd(w.scale, iteration, "Wishart scale");
  for (int j = 1; j <= d; ++j)
    out += boost::math::digamma(0.5 * (w.dof + 1 - j));
  return out;
}

Eigen::VectorXd expected_log_weights(const Eigen::VectorXd &conc) {
  const double total = boost::math::digamma(conc.sum());
  Eigen::VectorXd out(conc.size());
  for (Eigen::Index k = 0; k < conc.size(); ++k)
    out(k) = boost::math::digamma(conc(k)) - total;
  return out;
}

/// ν [(x − m)ᵀ W (x − m) + tr(W S)] for every row of data.
Eigen::VectorXd expected_quadratic(const Eigen::MatrixXd &data, const GaussianFactor &mean,
                                   const WishartFactor &prec) {
  const Eigen::MatrixXd centered = data.rowwise() - mean.mean.transpose();
  const Eigen::VectorXd quad = (centered * prec.scale).cwiseProduct(centered).rowwise().sum();
  const double trace = (prec.scale * mean.covariance).trace();
  return prec.dof * (quad.array() + trace).matrix();
}

void check_data(const MixtureModelSpec &spec, const Eigen::MatrixXd &data) {
  if (data.rows() < 1)
    throw ShapeError("mixture data is empty");
  if (data.cols() != spec.dim)
    throw ShapeError("data dimension differs from the model dimension");
  if (!data.allFinite())
    throw ShapeError("mixture data contains non-finite values");
}

void check_state(const MixtureModelSpec &spec, const Eigen::MatrixXd &data,
                 const MixtureVariationalState &s) {
  const auto m = static_cast<std::size_t>(spec.components);
  if (s.responsibilities.rows() != data.rows() ||
      s.responsibilities.cols() != spec.components ||
      static_cast<int>(s.weight_factor.size()) != spec.components ||
      s.mean_factors.size() != m || s.precision_factors.size() != m)
    throw ShapeError("variational state does not match the mixture model");
  for (const auto &p : s.precision_factors)
    if (!(p.dof > spec.dim - 1))
      throw ShapeError("Wishart degrees of freedom must exceed d − 1");
}

class Cavi {
public:
  Cavi(const MixtureModelSpec &spec, const Eigen::MatrixXd &data)
      : spec_(spec), data_(data),
        prior_mean_precision_(inverse_spd(spec.mean_prior_cov, 0, "mean prior covariance")),
        prior_scale_inverse_(inverse_spd(spec.wishart_scale, 0, "Wishart prior scale")) {}

  void update_weights(MixtureVariationalState &s) const {
    s.weight_factor = (s.responsibilities.colwise().sum().transpose().array() +
                       spec_.dirichlet_concentration)
                          .matrix();
  }

  void update_means(MixtureVariationalState &s, std::size_t it) const {
    const Eigen::VectorXd counts = s.responsibilities.colwise().sum().transpose();
    for (int k = 0; k < spec_.components; ++k) {
      const auto &w = s.precision_factors[static_cast<std::size_t>(k)];
      const Eigen::MatrixXd e_prec = w.dof * w.scale;
      const Eigen::MatrixXd precision = prior_mean_precision_ + counts(k) * e_prec;
      const Eigen::VectorXd weighted_sum = data_.transpose() * s.responsibilities.col(k);
      auto &f = s.mean_factors[static_cast<std::size_t>(k)];
      f.covariance = inverse_spd(precision, it, "mean factor precision");
      f.mean = f.covariance *
               (prior_mean_precision_ * spec_.mean_prior_mean + e_prec * weighted_sum);
    }
  }

  void update_precisions(MixtureVariationalState &s, std::size_t it) const {
    for (int k = 0; k < spec_.components; ++k) {
      const auto &f = s.mean_factors[static_cast<std::size_t>(k)];
      const Eigen::VectorXd r = s.responsibilities.col(k);
      const double count = r.sum();
      const Eigen::MatrixXd centered = data_.rowwise() - f.mean.transpose();
      Eigen::MatrixXd scatter = centered.transpose() * r.asDiagonal() * centered;
      scatter += count * f.covariance;
      auto &w = s.precision_factors[static_cast<std::size_t>(k)];
      w.dof = spec_.wishart_dof + count;
      w.scale = inverse_spd(prior_scale_inverse_ + scatter, it, "Wishart scale update");
    }
  }

  void update_responsibilities(MixtureVariationalState &s, std::size_t it) const {
    const Eigen::Index n = data_.rows();
    const Eigen::VectorXd elog_w = expected_log_weights(s.weight_factor);
    Eigen::MatrixXd log_rho(n, spec_.components);
    for (int k = 0; k < spec_.components; ++k) {
      const auto &mf = s.mean_factors[static_cast<std::size_t>(k)];
      const auto &pf = s.precision_factors[static_cast<std::size_t>(k)];
      const double constant =
          elog_w(k) + 0.5 * expected_log_det(pf, it) - 0.5 * spec_.dim * kLog2Pi;
      log_rho.col(k) = (constant - 0.5 * expected_quadratic(data_, mf, pf).array()).matrix();
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd row = log_rho.row(i).transpose();
      s.responsibilities.row(i) = softmax(row).transpose();
    }
    if (!s.responsibilities.allFinite())
      throw NumericalBreakdown("non-finite responsibilities", it);
  }

private:
  const MixtureModelSpec &spec_;
  const Eigen::MatrixXd &data_;
  Eigen::MatrixXd prior_mean_precision_;
  Eigen::MatrixXd prior_scale_inverse_;
};

double gaussian_log_density(const Eigen::VectorXd &x, const Eigen::VectorXd &mean,
                            const Eigen::MatrixXd &precision, double log_det_precision) {
  const Eigen::VectorXd c = x - mean;
  return 0.5 * log_det_precision - 0.5 * static_cast<double>(x.size()) * kLog2Pi -
         0.5 * c.dot(precision * c);
}

} // namespace

MixtureModelSpec MixtureModelSpec::standard(int components, int dim) {
  MixtureModelSpec s;
  s.components = components;
  s.dim = dim;
  s.mean_prior_mean = Eigen::VectorXd::Zero(dim);
  s.mean_prior_cov = 100.0 * Eigen::MatrixXd::Identity(dim, dim);
  s.wishart_dof = 10.0;
  s.wishart_scale = 0.1 * Eigen::MatrixXd::Identity(dim, dim);
  s.dirichlet_concentration = 1.0;
  s.validate();
  return s;
}

void MixtureModelSpec::validate() const {
  if (components < 1 || dim < 1)
    throw ConfigError("mixture needs at least one component and dimension");
  if (mean_prior_mean.size() != dim || mean_prior_cov.rows() != dim ||
      mean_prior_cov.cols() != dim || wishart_scale.rows() != dim ||
      wishart_scale.cols() != dim)
    throw ShapeError("mixture prior shapes do not match the dimension");
  if (!(wishart_dof > dim - 1))
    throw ConfigError("Wishart degrees of freedom must exceed d − 1");
  if (!(dirichlet_concentration > 0.0))
    throw ConfigError("Dirichlet concentration must be positive");
  for (const auto *m : {&mean_prior_cov, &wishart_scale}) {
    if (!m->isApprox(m->transpose()))
      throw ConfigError("prior matrices must be symmetric");
    if (Eigen::LLT<Eigen::MatrixXd>(*m).info() != Eigen::Success)
      throw ConfigError("prior matrices must be positive definite");
  }
}

ElboBreakdown mixture_objective(const MixtureModelSpec &spec, const Eigen::MatrixXd &data,
                                const MixtureVariationalState &s) {
  check_data(spec, data);
  check_state(spec, data, s);
  const int d = spec.dim;
  const Eigen::VectorXd elog_w = expected_log_weights(s.weight_factor);
  const Eigen::MatrixXd prior_prec = inverse_spd(spec.mean_prior_cov, 0, "mean prior covariance");
  const Eigen::MatrixXd prior_scale_inv = inverse_spd(spec.wishart_scale, 0, "Wishart prior scale");
  const double prior_logdet_cov = log_det_spd(spec.mean_prior_cov, 0, "mean prior covariance");
  const double prior_logdet_scale = log_det_spd(spec.wishart_scale, 0, "Wishart prior scale");

  double nll = 0.0;
  double kl = 0.0;
  for (int k = 0; k < spec.components; ++k) {
    const auto &mf = s.mean_factors[static_cast<std::size_t>(k)];
    const auto &pf = s.precision_factors[static_cast<std::size_t>(k)];
    const Eigen::VectorXd r = s.responsibilities.col(k);
    const double elogdet = expected_log_det(pf, 0);
    const Eigen::VectorXd quad = expected_quadratic(data, mf, pf);
    nll -= (r.array() * (0.5 * elogdet - 0.5 * d * kLog2Pi - 0.5 * quad.array())).sum();

    // labels
    for (Eigen::Index i = 0; i < r.size(); ++i)
      if (r(i) > 0.0)
        kl += r(i) * (std::log(r(i)) - elog_w(k));

    // mean factor vs N(μ0, Σ0)
    const Eigen::VectorXd dm = mf.mean - spec.mean_prior_mean;
    kl += 0.5 * ((prior_prec * mf.covariance).trace() + dm.dot(prior_prec * dm) - d +
                 prior_logdet_cov - log_det_spd(mf.covariance, 0, "mean factor covariance"));

    // precision factor vs Wishart(ν0, W0)
    const double nu = pf.dof, nu0 = spec.wishart_dof;
    const double logdet_w = log_det_spd(pf.scale, 0, "Wishart scale");
    const double e_log_q = -0.5 * nu * logdet_w - 0.5 * nu * d * std::log(2.0) -
                           log_multigamma(0.5 * nu, d) + 0.5 * (nu - d - 1) * elogdet -
                           0.5 * nu * d;
    const double e_log_p = -0.5 * nu0 * prior_logdet_scale - 0.5 * nu0 * d * std::log(2.0) -
                           log_multigamma(0.5 * nu0, d) + 0.5 * (nu0 - d - 1) * elogdet -
                           0.5 * nu * (prior_scale_inv * pf.scale).trace();
    kl += e_log_q - e_log_p;
  }
  // weights vs Dir(a0)
  const Eigen::VectorXd &a = s.weight_factor;
  const double a0 = spec.dirichlet_concentration;
  const double m = spec.components;
  kl += std::lgamma(a.sum()) - std::lgamma(m * a0) + m * std::lgamma(a0);
  for (Eigen::Index k = 0; k < a.size(); ++k)
    kl += -std::lgamma(a(k)) + (a(k) - a0) * elog_w(k);
  return ElboBreakdown::make(nll, kl);
}

MixtureVariationalState kmeanspp_init(const MixtureModelSpec &spec, const Eigen::MatrixXd &data,
                                      Rng &rng) {
  spec.validate();
  check_data(spec, data);
  const Eigen::Index n = data.rows();
  const int m = spec.components;
  std::vector<Eigen::Index> seeds;
  seeds.push_back(static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(n)) % n);
  Eigen::VectorXd dist2 = (data.rowwise() - data.row(seeds[0])).rowwise().squaredNorm();
  while (static_cast<int>(seeds.size()) < m) {
    const double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = uniform01(rng) * total;
      while (pick + 1 < n && u >= dist2(pick)) {
        u -= dist2(pick);
        ++pick;
      }
    } else {
      pick = static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(n)) % n;
    }
    seeds.push_back(pick);
    dist2 = dist2.cwiseMin((data.rowwise() - data.row(pick)).rowwise().squaredNorm());
  }
  MixtureVariationalState s;
  s.responsibilities = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) {
      const double dd = (data.row(i) - data.row(seeds[static_cast<std::size_t>(k)])).squaredNorm();
      if (dd < best_d) {
        best_d = dd;
        best = k;
      }
    }
    s.responsibilities(i, best) = 1.0;
  }
  for (int k = 0; k < m; ++k) {
    s.mean_factors.push_back(
        {data.row(seeds[static_cast<std::size_t>(k)]).transpose(),
         1e-2 * Eigen::MatrixXd::Identity(spec.dim, spec.dim)});
    s.precision_factors.push_back({spec.wishart_dof, spec.wishart_scale});
  }
  Cavi cavi(spec, data);
  cavi.update_weights(s);
  cavi.update_precisions(s, 0);
  return s;
}

MixtureFit cavi_fit(const MixtureModelSpec &spec, const Eigen::MatrixXd &data,
                    const MixtureVariationalState &init, int max_iters, double tol) {
  spec.validate();
  check_data(spec, data);
  check_state(spec, data, init);
  if (max_iters < 0 || !(tol > 0.0))
    throw ConfigError("CAVI needs max_iters ≥ 0 and tol > 0");
  Cavi cavi(spec, data);
  MixtureFit fit;
  fit.state = init;
  double current = mixture_objective(spec, data, fit.state).total;
  fit.trace.push_back(current);
  for (int it = 1; it <= max_iters; ++it) {
    const auto iter = static_cast<std::size_t>(it);
    cavi.update_weights(fit.state);
    cavi.update_means(fit.state, iter);
    cavi.update_precisions(fit.state, iter);
    cavi.update_responsibilities(fit.state, iter);
    double next = 0.0;
    try {
      next = mixture_objective(spec, data, fit.state).total;
    } catch (const NonFiniteObjective &e) {
      throw NumericalBreakdown(e.what(), iter);
    }
    fit.trace.push_back(next);
    fit.iterations = it;
    const double change = std::abs(current - next);
    current = next;
    if (change < tol * std::max(1.0, std::abs(next))) {
      fit.converged = true;
      break;
    }
  }
  fit.elbo = mixture_objective(spec, data, fit.state);
  return fit;
}

MixtureFit fit_mixture(const MixtureModelSpec &spec, const Eigen::MatrixXd &data,
                       const CaviConfig &config) {
  if (config.restarts < 1)
    throw ConfigError("need at least one restart");
  MixtureFit best;
  bool have = false;
  for (int r = 0; r < config.restarts; ++r) {
    Rng rng = make_rng(config.seed, {static_cast<std::uint64_t>(spec.components),
                                     static_cast<std::uint64_t>(r)});
    const auto init = kmeanspp_init(spec, data, rng);
    auto fit = cavi_fit(spec, data, init, config.max_iters, config.tol);
    if (!have || fit.elbo.total < best.elbo.total) {
      best = std::move(fit);
      have = true;
    }
  }
  return best;
}

namespace {

struct TruthComponent {
  double weight;
  double x;
  double y;
};

constexpr TruthComponent kTruth[] = {
    {0.3, 0.0, 0.0}, {0.3, -4.0, -4.0}, {0.2, 4.0, 4.0}, {0.2, 0.0, 4.0}};

} // namespace

TruthSample sample_truth(std::size_t n, std::uint64_t seed) {
  if (n < 1)
    throw ConfigError("sample size must be positive");
  Rng rng = make_rng(seed, {stable_hash("mixture-truth")});
  std::normal_distribution<double> normal(0.0, 1.0);
  TruthSample out;
  out.data.resize(static_cast<Eigen::Index>(n), 2);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = uniform01(rng);
    int k = 0;
    while (k < 3 && u >= kTruth[k].weight) {
      u -= kTruth[k].weight;
      ++k;
    }
    out.labels[i] = k;
    const auto row = static_cast<Eigen::Index>(i);
    out.data(row, 0) = kTruth[k].x + normal(rng);
    out.data(row, 1) = kTruth[k].y + normal(rng);
  }
  return out;
}

Eigen::VectorXd truth_density(const Eigen::MatrixXd &grid) {
  if (grid.cols() != 2)
    throw ShapeError("truth density grid must have two columns");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.rows());
  for (Eigen::Index i = 0; i < grid.rows(); ++i)
    for (const auto &c : kTruth) {
      const double dx = grid(i, 0) - c.x, dy = grid(i, 1) - c.y;
      out(i) += c.weight * std::exp(-0.5 * (dx * dx + dy * dy)) / (2.0 * std::numbers::pi);
    }
  return out;
}

Eigen::VectorXd predictive_density(const MixtureVariationalState &state,
                                   const Eigen::MatrixXd &grid) {
  const int m = state.components();
  if (m == 0)
    throw ShapeError("mixture state has no components");
  const auto d = state.mean_factors.front().mean.size();
  if (grid.cols() != d)
    throw ShapeError("grid dimension differs from the mixture dimension");
  const Eigen::VectorXd weights = state.weight_factor / state.weight_factor.sum();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.rows());
  for (int k = 0; k < m; ++k) {
    const auto &pf = state.precision_factors[static_cast<std::size_t>(k)];
    const Eigen::MatrixXd precision = pf.dof * pf.scale;
    const double logdet = log_det_spd(precision, 0, "plug-in precision");
    const auto &mean = state.mean_factors[static_cast<std::size_t>(k)].mean;
    for (Eigen::Index i = 0; i < grid.rows(); ++i)
      out(i) += weights(k) *
                std::exp(gaussian_log_density(grid.row(i).transpose(), mean, precision, logdet));
  }
  return out;
}

Eigen::VectorXd predictive_density(const CombinedPosterior &combined,
                                   const Eigen::MatrixXd &grid) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.rows());
  for (std::size_t i = 0; i < combined.model_ids.size(); ++i) {
    const auto &state =
        std::get<MixtureVariationalState>(combined.components.at(combined.model_ids[i]));
    out += combined.gamma(static_cast<Eigen::Index>(i)) * predictive_density(state, grid);
  }
  return out;
}

std::string model_id(int components) { return "m" + std::to_string(components); }

ModelCollection component_collection(const std::vector<int> &sizes) {
  if (sizes.empty())
    throw ConfigError("component grid is empty");
  std::vector<ModelEntry> entries;
  Eigen::VectorXd log_w(static_cast<Eigen::Index>(sizes.size()));
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const int m = sizes[i];
    if (m < 1)
      throw ConfigError("component counts must be positive");
    entries.push_back({model_id(m), "N(0,100I) x Wishart(10,0.1I) x Dir(1)",
                       static_cast<double>(m)});
    log_w(static_cast<Eigen::Index>(i)) = -m * std::log(static_cast<double>(m));
  }
  return ModelCollection::from_log_weights(std::move(entries), log_w);
}

ModelCollection component_collection(int max_components) {
  if (max_components < 1)
    throw ConfigError("component grid is empty");
  std::vector<int> sizes(static_cast<std::size_t>(max_components));
  std::iota(sizes.begin(), sizes.end(), 1);
  return component_collection(sizes);
}

} // namespace avb::mixture
