#include "avb/core/combine.hpp"
#include "avb/core/errors.hpp"
#include "avb/mixture/mixture.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace avb;
using namespace avb::mixture;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd two_clusters(std::mt19937_64 &rng, int n, std::vector<int> &labels) {
  std::normal_distribution<double> e(0.0, 1.0);
  MatrixXd x(n, 2);
  labels.assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const double c = i % 2 == 0 ? 10.0 : -10.0;
    labels[static_cast<std::size_t>(i)] = i % 2;
    x(i, 0) = c + e(rng);
    x(i, 1) = c + e(rng);
  }
  return x;
}

double gauss2(const VectorXd &x, const VectorXd &mu, const MatrixXd &cov) {
  const VectorXd d = x - mu;
  return std::exp(-0.5 * d.dot(cov.inverse() * d)) / (2 * M_PI * std::sqrt(cov.determinant()));
}

MatrixXd square_grid(double lo, double hi, int per_axis, double &cell) {
  cell = (hi - lo) / per_axis;
  MatrixXd g(per_axis * per_axis, 2);
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j) {
      g(i * per_axis + j, 0) = lo + (i + 0.5) * cell;
      g(i * per_axis + j, 1) = lo + (j + 0.5) * cell;
    }
  return g;
}

} // namespace

TEST_CASE("standard spec and validation") {
  const auto spec = MixtureModelSpec::standard(3, 2);
  CHECK(spec.mean_prior_cov.isApprox(100.0 * MatrixXd::Identity(2, 2)));
  CHECK(spec.wishart_scale.isApprox(0.1 * MatrixXd::Identity(2, 2)));
  CHECK(spec.wishart_dof == 10.0);
  CHECK_NOTHROW(spec.validate());
  auto bad = spec;
  bad.wishart_dof = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("single component: unit responsibilities and the conjugate mean update") {
  const auto sample = sample_truth(200, 3);
  const auto spec = MixtureModelSpec::standard(1, 2);
  CaviConfig config;
  config.seed = 1;
  config.restarts = 1;
  config.tol = 1e-14;
  const auto fit = fit_mixture(spec, sample.data, config);
  CHECK((fit.state.responsibilities.array() == 1.0).all());
  CHECK(fit.elbo.mc_samples_used == 0);

  // Given E[Λ] = νW, the Gaussian factor must be the conjugate update.
  const auto &w = fit.state.precision_factors[0];
  const MatrixXd e_prec = w.dof * w.scale;
  const MatrixXd prior_prec = spec.mean_prior_cov.inverse();
  const MatrixXd post_prec = prior_prec + 200.0 * e_prec;
  const VectorXd sum = sample.data.colwise().sum().transpose();
  const VectorXd mean = post_prec.ldlt().solve(prior_prec * spec.mean_prior_mean + e_prec * sum);
  CHECK((fit.state.mean_factors[0].mean - mean).norm() < 1e-6);
  CHECK(fit.state.mean_factors[0].covariance.isApprox(post_prec.inverse(), 1e-6));
}

TEST_CASE("well separated clusters are recovered") {
  std::mt19937_64 rng(10);
  std::vector<int> labels;
  const MatrixXd x = two_clusters(rng, 100, labels);
  CaviConfig config;
  config.seed = 4;
  const auto fit = fit_mixture(MixtureModelSpec::standard(2, 2), x, config);
  const auto &r = fit.state.responsibilities;
  CHECK(r.rowwise().maxCoeff().mean() >= 0.99);
  int agree = 0;
  for (int i = 0; i < 100; ++i) {
    Eigen::Index k;
    r.row(i).maxCoeff(&k);
    agree += static_cast<int>(k) == labels[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  CHECK(std::max(agree, 100 - agree) == 100);
}

TEST_CASE("CAVI objective is nonincreasing along the trace") {
  const auto sample = sample_truth(200, 11);
  for (int m = 1; m <= 6; ++m) {
    const auto spec = MixtureModelSpec::standard(m, 2);
    Rng rng = make_rng(5, {static_cast<std::uint64_t>(m)});
    const auto init = kmeanspp_init(spec, sample.data, rng);
    const auto fit = cavi_fit(spec, sample.data, init, 300, 1e-10);
    REQUIRE(fit.trace.size() >= 2);
    for (std::size_t t = 1; t < fit.trace.size(); ++t)
      CHECK(fit.trace[t] <= fit.trace[t - 1] + 1e-8 * std::max(1.0, std::abs(fit.trace[t - 1])));
    CHECK(std::abs(fit.elbo.total - (fit.elbo.expected_nll + fit.elbo.kl_to_prior)) < 1e-10);
    CHECK(fit.elbo.kl_to_prior >= 0.0);
    for (Eigen::Index i = 0; i < fit.state.responsibilities.rows(); ++i)
      CHECK(std::abs(fit.state.responsibilities.row(i).sum() - 1.0) < 1e-10);
  }
}

TEST_CASE("duplicated data doubles the expected log-likelihood term") {
  const auto sample = sample_truth(100, 2);
  const auto spec = MixtureModelSpec::standard(3, 2);
  CaviConfig config;
  config.seed = 8;
  const auto fit = fit_mixture(spec, sample.data, config);

  MatrixXd twice(200, 2);
  twice << sample.data, sample.data;
  auto state2 = fit.state;
  state2.responsibilities.resize(200, 3);
  state2.responsibilities << fit.state.responsibilities, fit.state.responsibilities;
  const auto e1 = mixture_objective(spec, sample.data, fit.state);
  const auto e2 = mixture_objective(spec, twice, state2);
  CHECK(e2.expected_nll == doctest::Approx(2.0 * e1.expected_nll).epsilon(1e-10));

  // Refitting on the doubled data can only improve on the copied state.
  const auto refit = cavi_fit(spec, twice, state2, 500, 1e-10);
  CHECK(refit.elbo.total <= e2.total + 1e-8 * std::abs(e2.total));
}

TEST_CASE("relabeling components leaves the objective unchanged") {
  const auto sample = sample_truth(150, 6);
  const auto spec = MixtureModelSpec::standard(3, 2);
  CaviConfig config;
  config.seed = 2;
  const auto fit = fit_mixture(spec, sample.data, config);
  auto perm = fit.state;
  const int order[3] = {2, 0, 1};
  for (int k = 0; k < 3; ++k) {
    perm.responsibilities.col(k) = fit.state.responsibilities.col(order[k]);
    perm.weight_factor[k] = fit.state.weight_factor[order[k]];
    perm.mean_factors[static_cast<std::size_t>(k)] = fit.state.mean_factors[static_cast<std::size_t>(order[k])];
    perm.precision_factors[static_cast<std::size_t>(k)] =
        fit.state.precision_factors[static_cast<std::size_t>(order[k])];
  }
  const double a = mixture_objective(spec, sample.data, fit.state).total;
  const double b = mixture_objective(spec, sample.data, perm).total;
  CHECK(std::abs(a - b) < 1e-10 * std::max(1.0, std::abs(a)));
}

TEST_CASE("truth sampler: determinism and law of large numbers") {
  const auto a = sample_truth(200, 99);
  const auto b = sample_truth(200, 99);
  CHECK(a.data == b.data);
  CHECK(a.labels == b.labels);

  const auto big = sample_truth(100000, 5);
  double counts[4] = {0, 0, 0, 0};
  VectorXd mean0 = VectorXd::Zero(2);
  for (std::size_t i = 0; i < big.labels.size(); ++i) {
    counts[big.labels[i]] += 1.0;
    if (big.labels[i] == 0)
      mean0 += big.data.row(static_cast<Eigen::Index>(i)).transpose();
  }
  mean0 /= counts[0];
  const double target[4] = {0.3, 0.3, 0.2, 0.2};
  for (int k = 0; k < 4; ++k)
    CHECK(std::abs(counts[k] / 1e5 - target[k]) < 0.01);
  CHECK(mean0.norm() < 0.1);
}

TEST_CASE("truth density integrates to one") {
  double cell = 0.0;
  const MatrixXd g = square_grid(-12.0, 12.0, 240, cell);
  CHECK(truth_density(g).sum() * cell * cell == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("predictive density: single Gaussian, normalization, convex combination") {
  const auto sample = sample_truth(200, 21);
  CaviConfig config;
  config.seed = 3;
  const auto one = fit_mixture(MixtureModelSpec::standard(1, 2), sample.data, config);
  const auto three = fit_mixture(MixtureModelSpec::standard(3, 2), sample.data, config);

  double cell = 0.0;
  const MatrixXd g = square_grid(-14.0, 14.0, 200, cell);
  const VectorXd d1 = predictive_density(one.state, g);
  const auto &w = one.state.precision_factors[0];
  const MatrixXd cov = (w.dof * w.scale).inverse();
  for (Eigen::Index i = 0; i < g.rows(); i += 997)
    CHECK(d1[i] == doctest::Approx(gauss2(g.row(i).transpose(), one.state.mean_factors[0].mean, cov)).epsilon(1e-10));
  CHECK(d1.sum() * cell * cell == doctest::Approx(1.0).epsilon(0.02));

  const VectorXd d3 = predictive_density(three.state, g);
  CHECK((d3.array() >= 0).all());
  CHECK(d3.sum() * cell * cell == doctest::Approx(1.0).epsilon(0.02));

  const auto coll = component_collection(std::vector<int>{1, 3});
  std::map<std::string, ModelFit> fits;
  fits.emplace("m1", ModelFit{one.state, one.elbo});
  fits.emplace("m3", ModelFit{three.state, three.elbo});
  auto combined = combine_posteriors(coll, fits);
  combined.gamma << 0.25, 0.75; // any probability vector
  const VectorXd mix = predictive_density(combined, g);
  CHECK((mix - (0.25 * d1 + 0.75 * d3)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("component prior weights follow exp(-m log m)") {
  const auto c = component_collection(6);
  REQUIRE(c.size() == 6);
  for (int m = 1; m <= 6; ++m) {
    CHECK(c.model(static_cast<std::size_t>(m - 1)).id == model_id(m));
    const double rel = (c.log_alpha()[m - 1] - c.log_alpha()[0]);
    CHECK(rel == doctest::Approx(-m * std::log(static_cast<double>(m))).epsilon(1e-12));
  }
  CHECK(std::abs(c.alpha().sum() - 1.0) < 1e-12);
}
