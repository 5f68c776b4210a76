// Acceptance harness: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--allow-fail N]...
// The exit status is nonzero when any criterion fails, except criteria
// listed with --allow-fail; those still print FAIL.

#include "avb/cli/config.hpp"
#include "avb/cli/experiments.hpp"
#include "avb/cli/serialize.hpp"
#include "avb/compare/compare.hpp"
#include "avb/core/combine.hpp"
#include "avb/core/divergence.hpp"
#include "avb/core/numeric.hpp"
#include "avb/deep/network.hpp"
#include "avb/deep/variational.hpp"
#include "avb/particle/particle.hpp"
#include "avb/quasi/sbm.hpp"
#include "avb/quasi/subgauss.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace avb;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;
using big = boost::multiprecision::cpp_bin_float_100;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

VectorXd simplex(std::mt19937_64 &rng, int n) {
  std::exponential_distribution<double> e(1.0);
  VectorXd v(n);
  for (auto &x : v)
    x = e(rng);
  return v / v.sum();
}

// Random log-likelihood on R^dim: a few bumps over a concave floor.
particle::ParticleModel random_loglik(std::mt19937_64 &rng, int dim, double scale) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd centres(dim, 3);
  for (Eigen::Index i = 0; i < centres.size(); ++i)
    centres.data()[i] = n(rng);
  VectorXd height(3);
  for (auto &h : height)
    h = scale * std::abs(n(rng));
  const double curvature = 0.2 + std::abs(n(rng));
  particle::ParticleModel m;
  m.log_likelihood = [centres, height, curvature](const VectorXd &t) {
    double s = -curvature * t.squaredNorm();
    for (int k = 0; k < 3; ++k)
      s += height[k] * std::exp(-(t - centres.col(k)).squaredNorm());
    return s;
  };
  return m;
}

particle::DiscretizedSpace random_space(std::mt19937_64 &rng, std::uint64_t budget) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const int dim = 1 + static_cast<int>(rng() % 3);
    const double bound = 0.5 + 2.5 * u(rng);
    const double max_per_axis = dim == 1 ? 400.0 : dim == 2 ? 40.0 : 14.0;
    const double spacing = 2.0 * bound / (2.0 + (max_per_axis - 2.0) * u(rng));
    auto s = particle::build_grid(dim, bound, spacing);
    if (s.atom_count() <= budget)
      return s;
  }
}

// Criterion 1 and 6b. Brute force over the union of all atoms, long double.
Outcome exact_equivalence() {
  std::mt19937_64 rng(101);
  double worst_models = 0.0, worst_within = 0.0, worst_joint = 0.0;
  int configs = 0;
  for (; configs < 60; ++configs) {
    const int models = 2 + configs % 4;
    std::uint64_t budget = 10000;
    std::vector<particle::DiscretizedSpace> spaces;
    std::vector<particle::ParticleModel> lls;
    std::vector<ModelEntry> entries;
    for (int m = 0; m < models; ++m) {
      spaces.push_back(random_space(rng, budget / static_cast<std::uint64_t>(models - m)));
      budget -= spaces.back().atom_count();
      lls.push_back(random_loglik(rng, spaces.back().dim(), 1.0 + 20.0 * (configs % 3)));
      entries.push_back({"space" + std::to_string(m), "uniform on atoms", 0.0});
    }
    const VectorXd alpha = simplex(rng, models);
    const ModelCollection coll(entries, alpha);
    std::map<std::string, ModelFit> fits;
    for (int m = 0; m < models; ++m) {
      particle::ParticleConfig pc;
      pc.particles = spaces[static_cast<std::size_t>(m)].atom_count();
      pc.iterations = 1;
      const auto f = particle::run_algorithm2(spaces[static_cast<std::size_t>(m)],
                                              lls[static_cast<std::size_t>(m)], pc);
      fits.emplace(entries[static_cast<std::size_t>(m)].id, ModelFit{f.state, f.elbo});
    }
    const auto combined = combine_posteriors(coll, fits);

    std::vector<std::vector<long double>> logw(static_cast<std::size_t>(models));
    long double mx = -INFINITY;
    for (int m = 0; m < models; ++m) {
      const auto &s = spaces[static_cast<std::size_t>(m)];
      for (particle::AtomIndex a = 0; a < s.atom_count(); ++a) {
        const long double v = std::log(static_cast<long double>(alpha[m])) -
                              std::log(static_cast<long double>(s.atom_count())) +
                              lls[static_cast<std::size_t>(m)].log_likelihood(s.atom(a));
        logw[static_cast<std::size_t>(m)].push_back(v);
        mx = std::max(mx, v);
      }
    }
    long double z = 0.0L;
    std::vector<long double> mass(static_cast<std::size_t>(models), 0.0L);
    for (int m = 0; m < models; ++m)
      for (const auto v : logw[static_cast<std::size_t>(m)]) {
        mass[static_cast<std::size_t>(m)] += std::exp(v - mx);
        z += std::exp(v - mx);
      }
    double tv_models = 0.0, tv_joint = 0.0;
    for (int m = 0; m < models; ++m) {
      const auto pm = static_cast<double>(mass[static_cast<std::size_t>(m)] / z);
      tv_models += std::abs(combined.gamma[m] - pm);
      const auto &st = std::get<particle::ParticleState>(combined.components.at(entries[static_cast<std::size_t>(m)].id));
      double tv_within = 0.0;
      for (std::size_t q = 0; q < st.centers.size(); ++q) {
        const long double v = logw[static_cast<std::size_t>(m)][st.centers[q]];
        const auto cond = static_cast<double>(std::exp(v - mx) / mass[static_cast<std::size_t>(m)]);
        const auto joint = static_cast<double>(std::exp(v - mx) / z);
        const double w = st.weights[static_cast<Eigen::Index>(q)];
        tv_within += std::abs(w - cond);
        tv_joint += std::abs(combined.gamma[m] * w - joint);
      }
      worst_within = std::max(worst_within, 0.5 * tv_within);
    }
    worst_models = std::max(worst_models, 0.5 * tv_models);
    worst_joint = std::max(worst_joint, 0.5 * tv_joint);
  }
  const bool ok = worst_models <= 1e-10 && worst_within <= 1e-10 && worst_joint <= 1e-10;
  return {ok, std::to_string(configs) + " configurations; max TV models " + fmt(worst_models) +
                  ", within-model " + fmt(worst_within) + ", joint " + fmt(worst_joint)};
}

// Criterion 2: the mixture objective over disjoint supports, evaluated atom
// by atom, against KL(γ, α) + Σ γ_m E_m.
Outcome decomposition_identity() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> n(0.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int models = 1 + trial % 6;
    std::vector<ModelEntry> entries;
    for (int m = 0; m < models; ++m)
      entries.push_back({"m" + std::to_string(m), "", 0.0});
    const VectorXd alpha = simplex(rng, models);
    VectorXd gamma = simplex(rng, models);
    if (trial % 7 == 0 && models > 1)
      gamma[0] = 0.0, gamma /= gamma.sum(); // a vanishing component
    const ModelCollection coll(entries, alpha);
    VectorXd objectives(models);
    long double lhs = 0.0L;
    for (int m = 0; m < models; ++m) {
      const int atoms = 1 + static_cast<int>(rng() % 20);
      const VectorXd prior = simplex(rng, atoms);
      VectorXd xi = simplex(rng, atoms);
      if (atoms > 2)
        xi[1] = 0.0, xi /= xi.sum();
      double e_m = 0.0;
      for (int a = 0; a < atoms; ++a) {
        const double ll = n(rng);
        e_m += -xi[a] * ll + xlogx_over_y(xi[a], prior[a]);
        const long double mix = static_cast<long double>(gamma[m]) * xi[a];
        if (mix > 0)
          lhs += mix * (-ll + std::log(mix / (static_cast<long double>(alpha[m]) * prior[a])));
      }
      objectives[m] = e_m;
    }
    const double rhs = elbo_of_combination(coll, gamma, objectives);
    worst = std::max(worst, std::abs(static_cast<double>(lhs) - rhs));
  }
  return {worst <= 1e-10, "1000 instances; max |difference| " + fmt(worst)};
}

// Criterion 3: log-domain γ against 100-digit evaluation of α e^{−E} / Σ α e^{−E}.
Outcome gamma_precision() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_log = 0.0, worst_gamma = 0.0;
  bool finite = true;
  int cases = 0;
  auto check = [&](const VectorXd &alpha, const VectorXd &e) {
    std::vector<ModelEntry> entries;
    for (Eigen::Index m = 0; m < alpha.size(); ++m)
      entries.push_back({"m" + std::to_string(m), "", 0.0});
    const ModelCollection coll(entries, alpha);
    std::map<std::string, ModelFit> fits;
    for (Eigen::Index m = 0; m < alpha.size(); ++m)
      fits.emplace(entries[static_cast<std::size_t>(m)].id,
                   ModelFit{deep::BoxVariationalState{}, ElboBreakdown::make(e[m], 0.0)});
    const auto c = combine_posteriors(coll, fits);
    std::vector<big> w(static_cast<std::size_t>(alpha.size()));
    big z = 0;
    for (Eigen::Index m = 0; m < alpha.size(); ++m) {
      w[static_cast<std::size_t>(m)] = big(alpha[m]) * boost::multiprecision::exp(-big(e[m]));
      z += w[static_cast<std::size_t>(m)];
    }
    for (Eigen::Index m = 0; m < alpha.size(); ++m) {
      const big g = w[static_cast<std::size_t>(m)] / z;
      const double lg = static_cast<double>(boost::multiprecision::log(g));
      finite = finite && std::isfinite(c.log_gamma[m]) && !std::isnan(c.gamma[m]);
      worst_log = std::max(worst_log, std::abs(c.log_gamma[m] - lg) / std::max(1.0, std::abs(lg)));
      if (std::abs(lg) <= 1.0)
        worst_gamma = std::max(worst_gamma, std::abs(c.gamma[m] - static_cast<double>(g)) / static_cast<double>(g));
    }
    ++cases;
  };
  VectorXd a(2), e(2);
  a << 0.7, 0.3;
  e << 1.0, 2.0;
  check(a, e);
  a << 0.5, 0.5;
  e << 0.0, 1e6;
  check(a, e);
  for (const double spread : {1.0, 10.0, 1e3, 1e6}) {
    for (int trial = 0; trial < 250; ++trial) {
      const int k = 2 + trial % 9;
      VectorXd ee(k);
      for (auto &v : ee)
        v = spread * u(rng);
      check(simplex(rng, k), ee);
    }
  }
  return {finite && worst_log <= 1e-12 && worst_gamma <= 1e-12,
          std::to_string(cases) + " cases, spreads to 1e6; max rel. error log γ " + fmt(worst_log) +
              ", γ " + fmt(worst_gamma) + (finite ? "" : "; NON-FINITE VALUES")};
}

// Criterion 4: (Σ|γ̂ − α̂|)² ≤ 2 KL(Ξ̂, exact posterior) with Ξ̂ built from
// partial particle fits so that Ξ̂ differs from the posterior.
Outcome probability_gap() {
  std::mt19937_64 rng(404);
  int held = 0, total = 0;
  double tightest = INFINITY;
  for (int trial = 0; trial < 1000; ++trial, ++total) {
    const int models = 2 + trial % 4;
    std::vector<particle::DiscretizedSpace> spaces;
    std::vector<particle::ParticleModel> lls;
    std::vector<ModelEntry> entries;
    for (int m = 0; m < models; ++m) {
      spaces.push_back(particle::build_grid(1, 1.0 + m, 0.25 + 0.25 * static_cast<double>(rng() % 3)));
      lls.push_back(random_loglik(rng, 1, 3.0));
      entries.push_back({"m" + std::to_string(m), "", 0.0});
    }
    const VectorXd alpha = simplex(rng, models);
    const ModelCollection coll(entries, alpha);
    std::map<std::string, ModelFit> fits;
    for (int m = 0; m < models; ++m) {
      const auto &s = spaces[static_cast<std::size_t>(m)];
      particle::ParticleConfig pc;
      pc.particles = 1 + rng() % s.atom_count();
      pc.iterations = 2;
      pc.seed = rng();
      const auto f = particle::run_algorithm2(s, lls[static_cast<std::size_t>(m)], pc);
      fits.emplace(entries[static_cast<std::size_t>(m)].id, ModelFit{f.state, f.elbo});
    }
    const auto combined = combine_posteriors(coll, fits);

    // Exact posterior over all atoms, model masses α̂, and KL(Ξ̂, posterior).
    std::vector<std::vector<long double>> lw(static_cast<std::size_t>(models));
    long double z = 0.0L;
    for (int m = 0; m < models; ++m) {
      const auto &s = spaces[static_cast<std::size_t>(m)];
      for (particle::AtomIndex a = 0; a < s.atom_count(); ++a) {
        const long double v = static_cast<long double>(alpha[m]) / s.atom_count() *
                              std::exp(static_cast<long double>(lls[static_cast<std::size_t>(m)].log_likelihood(s.atom(a))));
        lw[static_cast<std::size_t>(m)].push_back(v);
        z += v;
      }
    }
    VectorXd alpha_hat(models);
    long double kl = 0.0L;
    for (int m = 0; m < models; ++m) {
      long double mass = 0.0L;
      for (const auto v : lw[static_cast<std::size_t>(m)])
        mass += v / z;
      alpha_hat[m] = static_cast<double>(mass);
      const auto &st = std::get<particle::ParticleState>(combined.components.at(entries[static_cast<std::size_t>(m)].id));
      for (std::size_t q = 0; q < st.centers.size(); ++q) {
        const long double xi = static_cast<long double>(combined.gamma[m]) * st.weights[static_cast<Eigen::Index>(q)];
        if (xi > 0)
          kl += xi * std::log(xi / (lw[static_cast<std::size_t>(m)][st.centers[q]] / z));
      }
    }
    const auto r = model_probability_gap_bound(combined.gamma, alpha_hat / alpha_hat.sum(),
                                               std::max(0.0L, kl));
    held += r.holds ? 1 : 0;
    tightest = std::min(tightest, r.rhs - r.lhs);
  }
  return {held == total, std::to_string(held) + "/" + std::to_string(total) +
                             " instances hold; smallest slack " + fmt(tightest)};
}

// Criterion 6: Q = 1 against the exhaustive grid argmax; Q = N against the
// exact single-model posterior.
Outcome degenerate_particles() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  int argmax_ok = 0, argmax_total = 0;
  std::string sizes;
  for (int dim = 1; dim <= 2; ++dim) {
    const auto space = particle::build_grid(dim, 1.0, dim == 1 ? 0.001 : 0.021);
    const MatrixXd atoms = space.materialize();
    sizes += (sizes.empty() ? "" : ", ") + std::to_string(dim) + "-d N=" + std::to_string(space.atom_count());
    for (int trial = 0; trial < 20; ++trial, ++argmax_total) {
      VectorXd star(dim);
      for (auto &v : star)
        v = u(rng);
      const double c = 1.0 + 4.0 * std::abs(u(rng));
      const bool logcosh = trial % 2 == 1;
      particle::ParticleModel model;
      model.log_likelihood = [=](const VectorXd &t) {
        double s = 0.0;
        for (int j = 0; j < dim; ++j)
          s += logcosh ? -c * std::log(std::cosh(t[j] - star[j])) : -c * (t[j] - star[j]) * (t[j] - star[j]);
        return s;
      };
      model.log_likelihood_gradient = [=](const VectorXd &t, VectorXd &g) {
        double s = 0.0;
        for (int j = 0; j < dim; ++j) {
          const double d = t[j] - star[j];
          g[j] = logcosh ? -c * std::tanh(d) : -2.0 * c * d;
          s += logcosh ? -c * std::log(std::cosh(d)) : -c * d * d;
        }
        return s;
      };
      Eigen::Index best = 0;
      VectorXd ll(atoms.cols());
      for (Eigen::Index a = 0; a < atoms.cols(); ++a)
        ll[a] = model.log_likelihood(atoms.col(a));
      ll.maxCoeff(&best);
      particle::ParticleConfig pc;
      pc.particles = 1;
      pc.iterations = 100;
      pc.schedule = particle::Schedule::constant;
      pc.learning_rate = logcosh ? 1.0 / c : 1.0 / (2.0 * c);
      pc.seed = rng();
      const auto fit = particle::run_algorithm2(space, model, pc);
      argmax_ok += fit.state.centers[0] == static_cast<particle::AtomIndex>(best) ? 1 : 0;
    }
  }
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto space = random_space(rng, 10000);
    const auto model = random_loglik(rng, space.dim(), 10.0);
    particle::ParticleConfig pc;
    pc.particles = space.atom_count();
    pc.iterations = 1;
    const auto fit = particle::run_algorithm2(space, model, pc);
    std::vector<long double> lw;
    long double mx = -INFINITY, z = 0.0L;
    for (particle::AtomIndex a = 0; a < space.atom_count(); ++a) {
      lw.push_back(model.log_likelihood(space.atom(a)));
      mx = std::max(mx, lw.back());
    }
    for (const auto v : lw)
      z += std::exp(v - mx);
    double tv = 0.0;
    for (std::size_t q = 0; q < fit.state.centers.size(); ++q)
      tv += std::abs(fit.state.weights[static_cast<Eigen::Index>(q)] -
                     static_cast<double>(std::exp(lw[fit.state.centers[q]] - mx) / z));
    worst = std::max(worst, 0.5 * tv);
  }
  return {argmax_ok == argmax_total && worst <= 1e-10,
          "Q=1 argmax " + std::to_string(argmax_ok) + "/" + std::to_string(argmax_total) +
               " (" + sizes + "); Q=N max TV " + fmt(worst)};
}

// Criterion 7.
Outcome gradient_check() {
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  deep::NetArchitecture arch;
  arch.depth = 2;
  arch.width = 3;
  arch.input_dim = 1;
  arch.bound = 2.0;
  const deep::Network net(arch);
  MatrixXd x(1, 40);
  VectorXd y(40);
  for (int i = 0; i < 40; ++i) {
    x(0, i) = u01(rng);
    y[i] = std::sin(2 * M_PI * x(0, i)) + 0.1 * (u01(rng) - 0.5);
  }
  const deep::LikelihoodAdapter adapter(deep::GaussianRegression{x, y});
  const auto p = static_cast<Eigen::Index>(arch.parameter_count());
  double worst_kl = 0.0, worst_crn = 0.0;
  const int states = 25;
  for (int trial = 0; trial < states; ++trial) {
    deep::BoxVariationalState s{arch, VectorXd(p), VectorXd(p)};
    for (Eigen::Index j = 0; j < p; ++j) {
      const double c = -1.5 + 3.0 * u01(rng), w = 0.01 + 0.4 * u01(rng);
      s.lower[j] = c - w;
      s.upper[j] = c + w;
    }
    const double h = 1e-6;
    const auto g = deep::kl_gradient(s);
    for (Eigen::Index j = 0; j < p; ++j)
      for (int side = 0; side < 2; ++side) {
        auto sp = s, sm = s;
        (side == 0 ? sp.lower : sp.upper)[j] += h;
        (side == 0 ? sm.lower : sm.upper)[j] -= h;
        const double fd = (kl_uniform_box(sp.lower, sp.upper, arch.bound) -
                           kl_uniform_box(sm.lower, sm.upper, arch.bound)) / (2 * h);
        const double an = side == 0 ? g.lower[j] : g.upper[j];
        worst_kl = std::max(worst_kl, std::abs(an - fd) / std::abs(fd));
      }
    MatrixXd base(p, 8);
    for (Eigen::Index i = 0; i < base.size(); ++i)
      base.data()[i] = u01(rng);
    const auto est = deep::reparameterized_objective(net, s, adapter, base);
    VectorXd an(2 * p), fd(2 * p);
    an << est.gradient.lower, est.gradient.upper;
    for (Eigen::Index j = 0; j < p; ++j)
      for (int side = 0; side < 2; ++side) {
        auto sp = s, sm = s;
        (side == 0 ? sp.lower : sp.upper)[j] += h;
        (side == 0 ? sm.lower : sm.upper)[j] -= h;
        fd[side * p + j] = (deep::reparameterized_objective(net, sp, adapter, base).total -
                            deep::reparameterized_objective(net, sm, adapter, base).total) / (2 * h);
      }
    worst_crn = std::max(worst_crn, (an - fd).norm() / fd.norm());
  }
  return {worst_kl <= 1e-6 && worst_crn <= 1e-4,
          std::to_string(states) + " states on K=2, M=3; max rel. error KL " + fmt(worst_kl) +
              ", reparameterized " + fmt(worst_crn)};
}

// Criterion 8.
Outcome quasi_inequalities() {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int exact_held = 0, exact_total = 0;
  double worst_enum = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + trial % 5;
    const int pairs = n * (n - 1) / 2;
    VectorXd p(pairs), w(pairs);
    for (int e = 0; e < pairs; ++e)
      p[e] = u(rng), w[e] = u(rng);
    const auto r = quasi::sbm_learning_inequality_check(p, w);
    exact_held += r.holds ? 1 : 0;
    ++exact_total;
    // Enumeration of every graph for the smaller instances.
    if (pairs <= 10) {
      double total = 0.0;
      for (long mask = 0; mask < (1L << pairs); ++mask) {
        double prob = 1.0, lr = 0.0;
        for (int e = 0; e < pairs; ++e) {
          const double y = (mask >> e) & 1L ? 1.0 : 0.0;
          prob *= y == 1.0 ? p[e] : 1.0 - p[e];
          lr += -(y - w[e]) * (y - w[e]) + (y - p[e]) * (y - p[e]);
        }
        total += prob * std::exp(lr);
      }
      worst_enum = std::max(worst_enum, std::abs(total - r.lhs) / total);
    }
    for (const double rho : {0.5, 1.0, 2.0}) {
      exact_held += quasi::sbm_moment_bound_check(p, w, rho).holds ? 1 : 0;
      ++exact_total;
    }
  }
  std::normal_distribution<double> fn(0.0, 0.5);
  int mc_held = 0;
  double worst_margin = INFINITY;
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd f(10), star(10);
    for (int i = 0; i < 10; ++i)
      f[i] = fn(rng), star[i] = fn(rng);
    const auto r = quasi::subgauss_inequality_check(
        f, star, 0.5, 1.0,
        [](Rng &g) { return std::uniform_real_distribution<double>(-1.0, 1.0)(g); }, 100000,
        static_cast<std::uint64_t>(trial));
    mc_held += r.holds ? 1 : 0;
    worst_margin = std::min(worst_margin, r.margin);
  }
  return {exact_held == exact_total && mc_held == 20 && worst_enum <= 1e-10,
          "exact " + std::to_string(exact_held) + "/" + std::to_string(exact_total) +
              " (enumeration agreement " + fmt(worst_enum) + "); bounded noise " +
              std::to_string(mc_held) + "/20, smallest margin " + fmt(worst_margin) + " s.e."};
}

// Criterion 12: functional ≥ E_Ξ[loss], with the functional recomputed in
// 50-digit arithmetic as a cross-check.
Outcome risk_inequality() {
  using wide = boost::multiprecision::cpp_bin_float_50;
  std::mt19937_64 rng(1212);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto grid = compare::default_upsilon_grid();
  int held = 0;
  double worst_rel = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int atoms = 2 + static_cast<int>(rng() % 200);
    const VectorXd post = simplex(rng, atoms);
    VectorXd cand = trial % 3 == 0 ? post : simplex(rng, atoms);
    VectorXd loss(atoms);
    const double n = 10.0 + static_cast<double>(rng() % 200);
    for (auto &l : loss)
      l = n * u(rng) * u(rng);
    const auto r = compare::risk_bound_functional(post, cand, loss, grid);
    wide kl = 0, risk = 0;
    for (int a = 0; a < atoms; ++a) {
      if (cand[a] > 0)
        kl += wide(cand[a]) * boost::multiprecision::log(wide(cand[a]) / wide(post[a]));
      risk += wide(cand[a]) * wide(loss[a]);
    }
    wide best = -1;
    for (const double ups : grid) {
      wide mgf = 0;
      for (int a = 0; a < atoms; ++a)
        mgf += wide(post[a]) * boost::multiprecision::exp(wide(ups) * wide(loss[a]));
      const wide v = (kl + boost::multiprecision::log(mgf)) / wide(ups);
      if (best < 0 || v < best)
        best = v;
    }
    const double oracle = static_cast<double>(best);
    worst_rel = std::max(worst_rel, std::abs(r.value - oracle) / std::max(1.0, std::abs(oracle)));
    held += (best >= risk && r.value >= static_cast<double>(risk) - 1e-12) ? 1 : 0;
  }
  return {held == 1000 && worst_rel <= 1e-10,
          std::to_string(held) + "/1000 instances; agreement with 50-digit evaluation " + fmt(worst_rel)};
}

cli::ExperimentConfig mixture_config() {
  return cli::parse_config(json{{"kind", "mixture"},
                                {"name", "mixture"},
                                {"dataset", {{"n", 200}}},
                                {"grid", {1, 2, 3, 4, 5, 6}},
                                {"seeds", {{"master", 2024}, {"repeats", 10}}}});
}

cli::ExperimentConfig regression_config() {
  return cli::parse_config(json{
      {"kind", "deep_regression"},
      {"name", "sine"},
      {"dataset", {{"n", 256}, {"noise", 0.1}}},
      {"grid",
       {{{"depth", 2}, {"width", 8}},
        {{"depth", 2}, {"width", 16}},
        {{"depth", 3}, {"width", 8}},
        {{"depth", 3}, {"width", 16}}}},
      {"optimizer",
       {{"epochs", 500},
        {"learning_rate", 1e-3},
        {"name", "adam"},
        {"mc_samples", 8},
        {"batch_size", 8},
        {"init_half_width_fraction", 1e-4},
        {"init_center_spread", 1.0}}},
      {"prior", {{"b0", 1e-5}}},
      {"seeds", {{"master", 2024}, {"repeats", 20}}}});
}

cli::ExperimentConfig sbm_config() {
  return cli::parse_config(json{{"kind", "sbm"},
                                {"name", "planted"},
                                {"dataset", {{"n", 40}, {"blocks", 2}, {"p_in", 0.9}, {"p_out", 0.1}}},
                                {"grid", {1, 2, 3, 4}},
                                {"prior", {{"b0", 1.0}}},
                                {"optimizer", {{"restarts", 10}, {"max_iters", 200}}},
                                {"seeds", {{"master", 2024}, {"repeats", 10}}}});
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

double entropy(const json &gamma) {
  double h = 0.0;
  for (const auto &g : gamma) {
    const double p = g.get<double>();
    if (p > 0)
      h -= p * std::log(p);
  }
  return h;
}

template <class Fn>
Outcome timed(Fn &&fn) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception &e) {
    o = {false, std::string("error: ") + e.what()};
  }
  o.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return o;
}

} // namespace

int main(int argc, char **argv) {
  std::set<int> allowed;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--allow-fail") == 0 && i + 1 < argc)
      allowed.insert(std::atoi(argv[++i]));
    else {
      std::cerr << "usage: acceptance [--allow-fail N]...\n";
      return 2;
    }
  }

  std::map<int, Outcome> results;
  std::map<int, std::string> names{
      {1, "particle fits + combination reproduce exact posteriors"},
      {2, "objective decomposition over disjoint supports"},
      {3, "log-domain model weights vs 100-digit evaluation"},
      {4, "model-probability gap bounded by twice the KL"},
      {5, "combined objective never exceeds the selected model's"},
      {6, "particle degenerate cases (Q=1 argmax, Q=N posterior)"},
      {7, "KL and reparameterized gradients vs finite differences"},
      {8, "quasi-likelihood inequalities"},
      {9, "mixture experiment"},
      {10, "deep regression experiment"},
      {11, "planted SBM recovery"},
      {12, "risk functional dominates the exact risk"},
      {13, "byte-identical reruns"}};

  results[1] = timed(exact_equivalence);
  results[2] = timed(decomposition_identity);
  results[3] = timed(gamma_precision);
  results[4] = timed(probability_gap);
  results[6] = timed(degenerate_particles);
  results[7] = timed(gradient_check);
  results[8] = timed(quasi_inequalities);
  results[12] = timed(risk_inequality);

  std::vector<json> all_runs;
  cli::ExperimentOutput mixture_out, regression_out;

  results[9] = timed([&]() -> Outcome {
    mixture_out = cli::run_experiment(mixture_config(), 1);
    int mass_ok = 0, smooth = 0, dominance = 0;
    for (const auto &run : mixture_out.runs) {
      all_runs.push_back(run.result);
      const auto &post = run.result["posterior"];
      mass_ok += run.result["metrics"]["gamma_mass_3_to_5"].get<double>() >= 0.95 ? 1 : 0;
      smooth += entropy(post["gamma"]) > 0.0 ? 1 : 0;
      dominance += post["dominance"]["holds"].get<bool>() ? 1 : 0;
    }
    const int k = static_cast<int>(mixture_out.runs.size());
    return {mass_ok >= 8 && smooth >= 5 && dominance == k,
            "mass on m in {3,4,5} >= 0.95 in " + std::to_string(mass_ok) + "/" + std::to_string(k) +
                "; entropy > 0 in " + std::to_string(smooth) + "/" + std::to_string(k) +
                "; dominance " + std::to_string(dominance) + "/" + std::to_string(k)};
  });

  results[10] = timed([&]() -> Outcome {
    regression_out = cli::run_experiment(regression_config(), 1);
    int accurate = 0, dominance = 0;
    std::vector<double> avb, msvb;
    for (const auto &run : regression_out.runs) {
      all_runs.push_back(run.result);
      const auto &m = run.result["metrics"];
      avb.push_back(m["rmse_avb"].get<double>());
      msvb.push_back(m["rmse_msvb"].get<double>());
      accurate += avb.back() <= 0.15 ? 1 : 0;
      dominance += run.result["posterior"]["dominance"]["holds"].get<bool>() ? 1 : 0;
    }
    const int k = static_cast<int>(regression_out.runs.size());
    const double ma = median(avb), ms = median(msvb);
    return {dominance == k && accurate >= 16 && ma <= ms + 0.02,
            "dominance " + std::to_string(dominance) + "/" + std::to_string(k) +
                "; AVB test RMSE <= 0.15 in " + std::to_string(accurate) + "/" + std::to_string(k) +
                " (need 16); median RMSE AVB " + fmt(ma) + " vs MSVB " + fmt(ms)};
  });

  results[11] = timed([&]() -> Outcome {
    const auto out = cli::run_experiment(sbm_config(), 1);
    int good = 0;
    for (const auto &run : out.runs) {
      all_runs.push_back(run.result);
      double g2 = 0.0;
      for (const auto &m : run.result["posterior"]["models"])
        if (m["id"] == "m2")
          g2 = m["gamma"].get<double>();
      const double acc = run.result["model_details"]["m2"]["label_accuracy"].get<double>();
      good += g2 >= 0.9 && acc >= 0.95 ? 1 : 0;
    }
    return {good >= 9, "gamma(m=2) >= 0.9 and accuracy >= 0.95 in " + std::to_string(good) + "/" +
                           std::to_string(out.runs.size())};
  });

  results[5] = timed([&]() -> Outcome {
    // Extra runs of the remaining experiment kinds.
    for (const auto &doc :
         {json{{"kind", "particle_demo"},
               {"dataset", {{"n", 50}}},
               {"grid", {0, 1, 2, 3}},
               {"optimizer", {{"spacing", 0.25}, {"bound", 2.0}}},
               {"seeds", {{"master", 5}, {"repeats", 3}}}},
          json{{"kind", "quasi_regression"},
               {"dataset", {{"n", 100}, {"noise", 0.3}, {"noise_kind", "uniform"}}},
               {"grid", {{{"depth", 2}, {"width", 4}}, {{"depth", 2}, {"width", 8}}}},
               {"optimizer", {{"epochs", 50}, {"learning_rate", 1e-2}}},
               {"prior", {{"b0", 1e-5}}},
               {"kappa", 0.5},
               {"variance_proxy", 0.09},
               {"seeds", {{"master", 5}, {"repeats", 3}}}}}) {
      for (const auto &run : cli::run_experiment(cli::parse_config(doc), 1).runs)
        all_runs.push_back(run.result);
    }
    int held = 0;
    double slack = INFINITY;
    for (const auto &r : all_runs) {
      const auto &d = r["posterior"]["dominance"];
      held += d["holds"].get<bool>() ? 1 : 0;
      slack = std::min(slack, d["msvb_objective"].get<double>() - d["avb_objective"].get<double>());
    }
    return {held == static_cast<int>(all_runs.size()) && !all_runs.empty(),
            std::to_string(held) + "/" + std::to_string(all_runs.size()) +
                " runs across all experiment kinds; smallest gap " + fmt(slack)};
  });

  results[13] = timed([&]() -> Outcome {
    if (mixture_out.runs.empty() || regression_out.runs.empty())
      return {false, "reference runs missing"};
    const auto mix2 = cli::run_experiment(mixture_config(), 2);
    const auto reg2 = cli::run_experiment(regression_config(), 2);
    int same = 0, total = 0;
    auto compare_runs = [&](const cli::ExperimentOutput &a, const cli::ExperimentOutput &b) {
      for (std::size_t i = 0; i < a.runs.size(); ++i, ++total)
        same += cli::canonical_dump(a.runs[i].result, true) == cli::canonical_dump(b.runs[i].result, true) ? 1 : 0;
      ++total;
      same += cli::canonical_dump(a.summary, true) == cli::canonical_dump(b.summary, true) ? 1 : 0;
    };
    compare_runs(mixture_out, mix2);
    compare_runs(regression_out, reg2);
    return {same == total, std::to_string(same) + "/" + std::to_string(total) +
                               " result documents identical (second pass on 2 threads)"};
  });

  int failures = 0;
  for (const auto &[id, o] : results) {
    const bool tolerated = !o.pass && allowed.contains(id);
    if (!o.pass && !tolerated)
      ++failures;
    std::printf("%s criterion %2d: %s | %s | %.1fs%s\n", o.pass ? "PASS" : "FAIL", id,
                names[id].c_str(), o.detail.c_str(), o.seconds,
                tolerated ? " | known failure, tolerated by --allow-fail" : "");
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
