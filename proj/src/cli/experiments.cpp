#include "avb/cli/experiments.hpp"

#include "avb/cli/csv.hpp"
#include "avb/cli/logging.hpp"
#include "avb/cli/serialize.hpp"
#include "avb/compare/compare.hpp"
#include "avb/core/errors.hpp"
#include "avb/core/numeric.hpp"
#include "avb/core/rng.hpp"
#include "avb/deep/variational.hpp"
#include "avb/mixture/mixture.hpp"
#include "avb/particle/particle.hpp"
#include "avb/particle/space.hpp"
#include "avb/quasi/sbm.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

namespace avb::cli {

using nlohmann::json;

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)> &fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto &t : pool)
    t.join();
  for (const auto &e : errors)
    if (e)
      std::rethrow_exception(e);
}

std::uint64_t substream_seed(std::uint64_t master, int repeat, const std::string &key) {
  return make_rng(master, {static_cast<std::uint64_t>(repeat), stable_hash(key)})();
}

namespace {

using Clock = std::chrono::steady_clock;

/// Runs one model fit; numerical failures exclude the model instead of
/// aborting the run.
template <class Fn>
void guarded_fit(ModelOutcome &out, Fn &&fn) {
  try {
    fn(out);
  } catch (const NonFiniteObjective &e) {
    out.fit.reset();
    out.error = e.what();
  } catch (const NumericalBreakdown &e) {
    out.fit.reset();
    out.error = e.what();
  }
  if (!out.error.empty())
    log(LogLevel::warn, "model " + out.id + " excluded: " + out.error);
  else
    log(LogLevel::info, "model " + out.id + " objective " + std::to_string(out.fit->elbo.total));
}

std::string run_label(const ExperimentConfig &c, int repeat) {
  return c.name + " repeat " + std::to_string(repeat);
}

} // namespace

Assembled assemble(const ModelCollection &full, const std::vector<ModelOutcome> &outcomes,
                   const std::string &label) {
  std::vector<ModelEntry> entries;
  std::vector<double> log_w;
  std::map<std::string, ModelFit> fits;
  Assembled a;
  for (const auto &o : outcomes) {
    if (!o.fit) {
      a.excluded.push_back({{"id", o.id}, {"error", o.error}});
      continue;
    }
    const auto i = full.index_of(o.id);
    entries.push_back(full.model(i));
    log_w.push_back(full.log_alpha()(static_cast<Eigen::Index>(i)));
    fits.emplace(o.id, *o.fit);
  }
  if (entries.empty())
    throw NumericalBreakdown(label + ": every model fit failed", 0);
  a.collection = ModelCollection::from_log_weights(
      std::move(entries), Eigen::Map<const Eigen::VectorXd>(log_w.data(), static_cast<Eigen::Index>(log_w.size())),
      full.prior_exponent(), full.b0());
  a.combined = combine_posteriors(a.collection, fits);
  if (!a.excluded.empty())
    a.combined.warnings.push_back("excluded models after fit failure; γ renormalized over " +
                                  std::to_string(a.collection.size()) + " models");
  a.selection = compare::select_model(a.combined, a.collection);
  a.dominance = compare::objective_dominance(a.combined, a.collection, a.selection);
  if (!a.dominance.holds) {
    std::ostringstream msg;
    msg << std::setprecision(17) << label << ": objective dominance violated (avb "
        << a.dominance.avb_objective << " > msvb " << a.dominance.msvb_objective << ")";
    throw Error(msg.str());
  }
  return a;
}

namespace {

json config_echo(const ExperimentConfig &config) {
  json echo = to_json(config);
  echo.erase("output_dir");
  return echo;
}

json base_result(const ExperimentConfig &config, int repeat, const Assembled &a,
                 const std::vector<ModelOutcome> &outcomes) {
  json details = json::object();
  for (const auto &o : outcomes)
    details[o.id] = o.extra;
  return {{"schema", kSchemaName},
          {"schema_version", kSchemaVersion},
          {"code_version", code_version()},
          {"experiment",
           {{"name", config.name},
            {"kind", to_string(config.kind)},
            {"repeat", repeat},
            {"master_seed", config.seeds.master}}},
          {"config", config_echo(config)},
          {"posterior", posterior_to_json(a.collection, a.combined, a.selection, a.dominance)},
          {"excluded_models", a.excluded},
          {"model_details", details}};
}

double gamma_entropy(const Eigen::VectorXd &gamma) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < gamma.size(); ++i)
    if (gamma(i) > 0.0)
      h -= gamma(i) * std::log(gamma(i));
  return h;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = make_rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(idx[i - 1], idx[pick(rng)]);
  }
  return idx;
}

// ---------------------------------------------------------------- mixture

RunOutput run_mixture(const ExperimentConfig &c, int r, int jobs) {
  const auto truth = mixture::sample_truth(c.dataset.n, substream_seed(c.seeds.master, r, "data"));
  const auto full = mixture::component_collection(c.sizes);
  std::vector<ModelOutcome> outcomes(c.sizes.size());
  parallel_for(c.sizes.size(), jobs, [&](std::size_t i) {
    auto &o = outcomes[i];
    o.id = mixture::model_id(c.sizes[i]);
    guarded_fit(o, [&](ModelOutcome &out) {
      mixture::CaviConfig cc;
      cc.max_iters = c.optimizer.max_iters;
      cc.tol = c.optimizer.tol;
      cc.restarts = c.optimizer.restarts;
      cc.seed = substream_seed(c.seeds.master, r, out.id);
      const auto fit =
          mixture::fit_mixture(mixture::MixtureModelSpec::standard(c.sizes[i], 2), truth.data, cc);
      out.fit = ModelFit{fit.state, fit.elbo};
      out.extra = {{"iterations", fit.iterations}, {"converged", fit.converged}};
    });
  });
  const auto a = assemble(full, outcomes, run_label(c, r));
  RunOutput run{r, base_result(c, r, a, outcomes), {}};

  double mass = 0.0;
  for (std::size_t i = 0; i < a.combined.size(); ++i) {
    const auto &id = a.combined.model_ids[i];
    if (id == "m3" || id == "m4" || id == "m5")
      mass += a.combined.gamma(static_cast<Eigen::Index>(i));
  }
  // density grid on [−8, 8]²
  const int g = c.density_grid;
  Eigen::MatrixXd grid(g * g, 2);
  const double step = 16.0 / (g - 1);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j)
      grid.row(i * g + j) << -8.0 + step * i, -8.0 + step * j;
  const Eigen::VectorXd dt = mixture::truth_density(grid);
  const Eigen::VectorXd da = mixture::predictive_density(a.combined, grid);
  const Eigen::VectorXd ds = mixture::predictive_density(
      std::get<mixture::MixtureVariationalState>(a.combined.components.at(a.selection.selected_model)),
      grid);
  const double cell = step * step;
  run.result["metrics"] = {{"gamma_entropy", gamma_entropy(a.combined.gamma)},
                           {"gamma_mass_3_to_5", mass},
                           {"density_l1_avb", (da - dt).cwiseAbs().sum() * cell},
                           {"density_l1_msvb", (ds - dt).cwiseAbs().sum() * cell},
                           {"n", c.dataset.n}};
  std::ostringstream csv;
  csv << "x,y,truth,avb,msvb\n";
  for (Eigen::Index k = 0; k < grid.rows(); ++k)
    csv << fmt(grid(k, 0)) << ',' << fmt(grid(k, 1)) << ',' << fmt(dt(k)) << ',' << fmt(da(k))
        << ',' << fmt(ds(k)) << '\n';
  run.plots.push_back({"density", csv.str()});
  return run;
}

// ---------------------------------------------------------------- regression

RegressionDataset regression_data(const ExperimentConfig &c, int r) {
  if (c.dataset.source == "csv")
    return ingest_csv(c.dataset.path, c.dataset.target);
  Rng rng = make_rng(substream_seed(c.seeds.master, r, "data"));
  const auto n = static_cast<Eigen::Index>(c.dataset.n);
  Eigen::MatrixXd x(n, 1);
  RegressionDataset ds;
  ds.feature_names = {"x"};
  ds.target_name = "y";
  ds.targets.resize(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = uniform01(rng);
    const double eps = c.dataset.noise_kind == "uniform" ? 2.0 * uniform01(rng) - 1.0 : gauss(rng);
    ds.targets(i) = std::sin(2.0 * std::numbers::pi * x(i, 0)) + c.dataset.noise * eps;
  }
  ds.transform = Standardizer::fit(x);
  ds.features = ds.transform.transform(x);
  return ds;
}

RunOutput run_regression(const ExperimentConfig &c, int r, int jobs) {
  const auto ds = regression_data(c, r);
  const auto n = static_cast<std::size_t>(ds.targets.size());
  const auto n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(c.test_fraction * static_cast<double>(n))));
  if (n < n_test + 2)
    throw ConfigError("dataset too small for the train/test split");
  const auto n_train = n - n_test;
  const auto perm = permutation(n, substream_seed(c.seeds.master, r, "split"));
  const auto d = ds.features.cols();
  deep::InputMatrix xtr(d, static_cast<Eigen::Index>(n_train)), xte(d, static_cast<Eigen::Index>(n_test));
  Eigen::VectorXd ytr(static_cast<Eigen::Index>(n_train)), yte(static_cast<Eigen::Index>(n_test));
  for (std::size_t k = 0; k < n; ++k) {
    const auto src = static_cast<Eigen::Index>(perm[k]);
    if (k < n_train) {
      xtr.col(static_cast<Eigen::Index>(k)) = ds.features.row(src).transpose();
      ytr(static_cast<Eigen::Index>(k)) = ds.targets(src);
    } else {
      xte.col(static_cast<Eigen::Index>(k - n_train)) = ds.features.row(src).transpose();
      yte(static_cast<Eigen::Index>(k - n_train)) = ds.targets(src);
    }
  }
  const double bound = c.prior.bound.value_or(std::sqrt(static_cast<double>(n)));
  std::vector<deep::NetArchitecture> grid;
  for (const auto &[k, m] : c.architectures)
    grid.push_back({k, m, static_cast<int>(d), bound});

  const bool quasi = c.kind == ExperimentKind::quasi_regression;
  deep::LikelihoodAdapter adapter =
      quasi ? deep::LikelihoodAdapter{deep::QuasiGaussianRegression{xtr, ytr, *c.kappa, c.variance_proxy}}
            : deep::LikelihoodAdapter{deep::GaussianRegression{xtr, ytr}};

  const auto full = deep::architecture_collection(grid, c.prior.b0, n_train);
  std::vector<ModelOutcome> outcomes(grid.size());
  parallel_for(grid.size(), jobs, [&](std::size_t i) {
    auto &o = outcomes[i];
    o.id = grid[i].id();
    guarded_fit(o, [&](ModelOutcome &out) {
      deep::TrainConfig t;
      t.epochs = c.optimizer.epochs;
      t.learning_rate = c.optimizer.learning_rate;
      t.mc_samples = c.optimizer.mc_samples;
      t.eval_samples = c.optimizer.eval_samples;
      t.optimizer = deep::parse_optimizer(c.optimizer.name);
      t.batch_size = c.optimizer.batch_size;
      t.init_half_width_fraction = c.optimizer.init_half_width_fraction;
      t.init_center_spread = c.optimizer.init_center_spread;
      t.seed = substream_seed(c.seeds.master, r, out.id);
      const auto fit = deep::fit_model(grid[i], adapter, t);
      out.fit = ModelFit{fit.state, fit.elbo};
      out.extra = {{"parameters", grid[i].parameter_count()},
                   {"final_epoch_objective", fit.trace.empty() ? 0.0 : fit.trace.back()}};
    });
  });
  const auto a = assemble(full, outcomes, run_label(c, r));
  RunOutput run{r, base_result(c, r, a, outcomes), {}};

  Rng ra = make_rng(substream_seed(c.seeds.master, r, "predict_avb"));
  Rng rs = make_rng(substream_seed(c.seeds.master, r, "predict_msvb"));
  const auto pa = deep::posterior_mean_predict(a.combined, xte, c.predict_draws, ra);
  const auto ps = deep::posterior_mean_predict(
      std::get<deep::BoxVariationalState>(a.combined.components.at(a.selection.selected_model)), xte,
      c.predict_draws, rs);
  const double rmse_a = std::sqrt((pa.mean - yte).squaredNorm() / static_cast<double>(n_test));
  const double rmse_s = std::sqrt((ps.mean - yte).squaredNorm() / static_cast<double>(n_test));
  const double ysd = std::sqrt((ytr.array() - ytr.mean()).square().mean());
  json metrics = {{"rmse_avb", rmse_a},
                  {"rmse_msvb", rmse_s},
                  {"rmse_avb_standardized", ysd > 0.0 ? rmse_a / ysd : rmse_a},
                  {"rmse_msvb_standardized", ysd > 0.0 ? rmse_s / ysd : rmse_s},
                  {"gamma_entropy", gamma_entropy(a.combined.gamma)},
                  {"n_train", n_train},
                  {"n_test", n_test},
                  {"bound", bound},
                  {"feature_standardization",
                   {{"names", ds.feature_names},
                    {"mean", std::vector<double>(ds.transform.mean.data(),
                                                 ds.transform.mean.data() + ds.transform.mean.size())},
                    {"scale", std::vector<double>(ds.transform.scale.data(),
                                                  ds.transform.scale.data() + ds.transform.scale.size())}}}};
  if (quasi) {
    metrics["kappa"] = *c.kappa;
    if (c.variance_proxy)
      metrics["kappa_valid"] = *c.kappa < 1.0 / *c.variance_proxy;
  }
  run.result["metrics"] = metrics;

  const Eigen::MatrixXd raw = ds.transform.inverse(xte.transpose());
  std::ostringstream csv;
  csv << "x,y,avb_mean,avb_std_error,msvb_mean\n";
  for (Eigen::Index k = 0; k < yte.size(); ++k)
    csv << fmt(raw(k, 0)) << ',' << fmt(yte(k)) << ',' << fmt(pa.mean(k)) << ','
        << fmt(pa.std_error(k)) << ',' << fmt(ps.mean(k)) << '\n';
  run.plots.push_back({"predictions", csv.str()});
  return run;
}

// ---------------------------------------------------------------- sbm

RunOutput run_sbm(const ExperimentConfig &c, int r, int jobs) {
  quasi::SbmData data;
  std::vector<int> truth;
  if (c.dataset.source == "csv") {
    data = ingest_edge_list(c.dataset.path);
  } else {
    Rng rng = make_rng(substream_seed(c.seeds.master, r, "data"));
    auto g = quasi::planted_partition(static_cast<int>(c.dataset.n), c.dataset.blocks,
                                      c.dataset.p_in, c.dataset.p_out, rng);
    data = std::move(g.data);
    truth = std::move(g.labels);
  }
  const auto full = quasi::sbm_collection(c.sizes, data.nodes(), c.prior.b0);
  std::vector<ModelOutcome> outcomes(c.sizes.size());
  parallel_for(c.sizes.size(), jobs, [&](std::size_t i) {
    auto &o = outcomes[i];
    o.id = quasi::SbmModelSpec{c.sizes[i]}.id();
    guarded_fit(o, [&](ModelOutcome &out) {
      quasi::SbmFitConfig sc;
      sc.max_iters = c.optimizer.max_iters;
      sc.tol = c.optimizer.tol;
      sc.restarts = c.optimizer.restarts;
      sc.seed = substream_seed(c.seeds.master, r, out.id);
      const auto fit = quasi::sbm_fit(data, {c.sizes[i]}, sc);
      out.fit = ModelFit{fit.state, fit.elbo};
      const Eigen::VectorXd sizes = fit.state.label_probs.colwise().sum().transpose();
      out.extra = {{"iterations", fit.iterations},
                   {"converged", fit.converged},
                   {"community_sizes", std::vector<double>(sizes.data(), sizes.data() + sizes.size())}};
      if (!truth.empty())
        out.extra["label_accuracy"] = quasi::label_accuracy(truth, quasi::map_labels(fit.state));
    });
  });
  const auto a = assemble(full, outcomes, run_label(c, r));
  RunOutput run{r, base_result(c, r, a, outcomes), {}};
  const auto &sel =
      std::get<quasi::SbmVariationalState>(a.combined.components.at(a.selection.selected_model));
  const auto labels = quasi::map_labels(sel);
  json metrics = {{"gamma_entropy", gamma_entropy(a.combined.gamma)},
                  {"selected_communities", sel.communities()},
                  {"nodes", data.nodes()},
                  {"edges", data.edges().size()}};
  if (!truth.empty())
    metrics["label_accuracy"] = quasi::label_accuracy(truth, labels);
  run.result["metrics"] = metrics;
  std::ostringstream csv;
  csv << "node,truth,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    csv << i << ',' << (truth.empty() ? -1 : truth[i]) << ',' << labels[i] << '\n';
  run.plots.push_back({"labels", csv.str()});
  return run;
}

// ---------------------------------------------------------------- particles

RunOutput run_particles(const ExperimentConfig &c, int r, int jobs) {
  const auto n = static_cast<Eigen::Index>(c.dataset.n);
  Eigen::VectorXd x(n), f_star(n), y(n);
  Rng rng = make_rng(substream_seed(c.seeds.master, r, "data"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i) = n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    double f = 0.0, p = 1.0;
    for (const double coef : c.dataset.truth) {
      f += coef * p;
      p *= x(i);
    }
    f_star(i) = f;
    const double eps = c.dataset.noise_kind == "uniform" ? 2.0 * uniform01(rng) - 1.0 : gauss(rng);
    y(i) = f + c.dataset.noise * eps;
  }
  const double log_n = std::log(static_cast<double>(n));
  std::vector<ModelEntry> entries;
  std::vector<Eigen::MatrixXd> designs;
  std::vector<particle::DiscretizedSpace> spaces;
  for (const int deg : c.sizes) {
    entries.push_back({"deg" + std::to_string(deg), "uniform on the spacing grid",
                       (deg + 1) * std::sqrt(log_n / static_cast<double>(n))});
    Eigen::MatrixXd phi(n, deg + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      double p = 1.0;
      for (int k = 0; k <= deg; ++k, p *= x(i))
        phi(i, k) = p;
    }
    designs.push_back(std::move(phi));
    spaces.push_back(particle::build_grid(deg + 1, c.optimizer.bound, c.optimizer.spacing));
  }
  const auto full = ModelCollection::from_complexity(entries, c.prior.b0, c.prior.exponent,
                                                     static_cast<double>(n));
  const double log_norm = -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  auto loglik = [&](std::size_t m, const Eigen::VectorXd &theta) {
    return log_norm - 0.5 * (y - designs[m] * theta).squaredNorm();
  };

  std::vector<ModelOutcome> outcomes(c.sizes.size());
  std::vector<particle::ParticleState> states(c.sizes.size());
  parallel_for(c.sizes.size(), jobs, [&](std::size_t m) {
    auto &o = outcomes[m];
    o.id = entries[m].id;
    guarded_fit(o, [&](ModelOutcome &out) {
      particle::ParticleModel model;
      model.log_likelihood = [&, m](const Eigen::VectorXd &t) { return loglik(m, t); };
      model.log_likelihood_gradient = [&, m](const Eigen::VectorXd &t, Eigen::VectorXd &g) {
        const Eigen::VectorXd res = y - designs[m] * t;
        g = designs[m].transpose() * res;
        return log_norm - 0.5 * res.squaredNorm();
      };
      particle::ParticleConfig pc;
      const auto atoms = spaces[m].atom_count();
      pc.particles = c.optimizer.particles == 0 ? static_cast<std::size_t>(atoms) : c.optimizer.particles;
      pc.iterations = c.optimizer.iterations;
      pc.learning_rate = pc.particles == atoms ? 0.0 : c.optimizer.particle_learning_rate;
      pc.seed = substream_seed(c.seeds.master, r, out.id);
      auto fit = particle::run_algorithm2(spaces[m], model, pc);
      out.fit = ModelFit{fit.state, fit.elbo};
      out.extra = {{"atoms", atoms}, {"particles", pc.particles}};
      states[m] = std::move(fit.state);
    });
  });
  const auto a = assemble(full, outcomes, run_label(c, r));
  RunOutput run{r, base_result(c, r, a, outcomes), {}};

  // exact discretized posterior over the union of atoms, when enumerable
  std::uint64_t total = 0;
  for (const auto &s : spaces)
    total += s.atom_count();
  json metrics = {{"gamma_entropy", gamma_entropy(a.combined.gamma)}, {"atoms_total", total}};
  Eigen::VectorXd mean_avb = Eigen::VectorXd::Zero(n), mean_msvb = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < a.combined.size(); ++i) {
    const auto m = static_cast<std::size_t>(
        std::find_if(entries.begin(), entries.end(),
                     [&](const ModelEntry &e) { return e.id == a.combined.model_ids[i]; }) -
        entries.begin());
    const auto &st = states[m];
    Eigen::VectorXd fm = Eigen::VectorXd::Zero(n);
    for (std::size_t q = 0; q < st.particle_count(); ++q)
      fm += st.weights(static_cast<Eigen::Index>(q)) *
            (designs[m] * st.coordinates.col(static_cast<Eigen::Index>(q)));
    mean_avb += a.combined.gamma(static_cast<Eigen::Index>(i)) * fm;
    if (a.combined.model_ids[i] == a.selection.selected_model)
      mean_msvb = fm;
  }
  constexpr std::uint64_t kEnumerationLimit = 200000;
  if (total <= kEnumerationLimit && a.excluded.empty()) {
    const auto t = static_cast<Eigen::Index>(total);
    Eigen::VectorXd log_post(t), loss(t), avb = Eigen::VectorXd::Zero(t), msvb = Eigen::VectorXd::Zero(t);
    Eigen::Index offset = 0;
    for (std::size_t m = 0; m < spaces.size(); ++m) {
      const auto nm = static_cast<Eigen::Index>(spaces[m].atom_count());
      const auto k = static_cast<Eigen::Index>(a.collection.index_of(entries[m].id));
      const double lw = a.collection.log_alpha()(k) - std::log(static_cast<double>(nm));
      for (Eigen::Index j = 0; j < nm; ++j) {
        const Eigen::VectorXd theta = spaces[m].atom(static_cast<particle::AtomIndex>(j));
        log_post(offset + j) = lw + loglik(m, theta);
        loss(offset + j) = (designs[m] * theta - f_star).squaredNorm();
      }
      const auto &st = states[m];
      for (std::size_t q = 0; q < st.particle_count(); ++q) {
        const auto at = offset + static_cast<Eigen::Index>(st.centers[q]);
        avb(at) = a.combined.gamma(k) * st.weights(static_cast<Eigen::Index>(q));
        if (entries[m].id == a.selection.selected_model)
          msvb(at) = st.weights(static_cast<Eigen::Index>(q));
      }
      offset += nm;
    }
    const Eigen::VectorXd post = softmax(log_post);
    const auto grid = compare::default_upsilon_grid();
    const auto ra = compare::risk_bound_functional(post, avb, loss, grid);
    const auto rs = compare::risk_bound_functional(post, msvb, loss, grid);
    metrics["risk_bound_avb"] = ra.value;
    metrics["risk_bound_msvb"] = rs.value;
    metrics["risk_avb"] = compare::expected_risk(avb, loss);
    metrics["risk_msvb"] = compare::expected_risk(msvb, loss);
    metrics["risk_posterior"] = compare::expected_risk(post, loss);
    metrics["tv_avb_vs_posterior"] = compare::total_variation(avb, post);
  } else {
    metrics["risk_bound_avb"] = nullptr;
    metrics["risk_bound_msvb"] = nullptr;
  }
  run.result["metrics"] = metrics;
  std::ostringstream csv;
  csv << "x,truth,y,avb_mean,msvb_mean\n";
  for (Eigen::Index i = 0; i < n; ++i)
    csv << fmt(x(i)) << ',' << fmt(f_star(i)) << ',' << fmt(y(i)) << ',' << fmt(mean_avb(i)) << ','
        << fmt(mean_msvb(i)) << '\n';
  run.plots.push_back({"fit", csv.str()});
  return run;
}

RunOutput run_one(const ExperimentConfig &c, int r, int jobs) {
  const auto start = Clock::now();
  RunOutput out;
  switch (c.kind) {
  case ExperimentKind::mixture:
    out = run_mixture(c, r, jobs);
    break;
  case ExperimentKind::deep_regression:
  case ExperimentKind::quasi_regression:
    out = run_regression(c, r, jobs);
    break;
  case ExperimentKind::sbm:
    out = run_sbm(c, r, jobs);
    break;
  case ExperimentKind::particle_demo:
    out = run_particles(c, r, jobs);
    break;
  }
  out.result["timing"] = {
      {"wall_clock_seconds", std::chrono::duration<double>(Clock::now() - start).count()}};
  return out;
}

json summarize(const ExperimentConfig &c, const std::vector<RunOutput> &runs) {
  json per_run = json::array();
  std::map<std::string, std::vector<double>> numeric;
  std::map<std::string, int> selections;
  for (const auto &run : runs) {
    const auto &post = run.result.at("posterior");
    json gamma = json::object();
    for (const auto &m : post.at("models"))
      gamma[m.at("id").get<std::string>()] = m.at("gamma");
    const auto selected = post.at("selection").at("selected_model").get<std::string>();
    ++selections[selected];
    per_run.push_back({{"repeat", run.repeat},
                       {"selected_model", selected},
                       {"gamma", gamma},
                       {"dominance_holds", post.at("dominance").at("holds")},
                       {"metrics", run.result.at("metrics")}});
    for (const auto &[key, v] : run.result.at("metrics").items())
      if (v.is_number())
        numeric[key].push_back(v.get<double>());
  }
  json aggregates = json::object();
  for (auto &[key, values] : numeric) {
    std::sort(values.begin(), values.end());
    const auto k = values.size();
    const double median = k % 2 ? values[k / 2] : 0.5 * (values[k / 2 - 1] + values[k / 2]);
    double mean = 0.0;
    for (const double v : values)
      mean += v;
    aggregates[key] = {{"median", median},
                       {"mean", mean / static_cast<double>(k)},
                       {"min", values.front()},
                       {"max", values.back()},
                       {"count", k}};
  }
  return {{"schema", "avb.summary"},
          {"schema_version", kSchemaVersion},
          {"code_version", code_version()},
          {"name", c.name},
          {"kind", to_string(c.kind)},
          {"repeats", c.seeds.repeats},
          {"runs", per_run},
          {"selection_counts", selections},
          {"aggregates", aggregates}};
}

} // namespace

ExperimentOutput run_experiment(const ExperimentConfig &config, int jobs) {
  config.validate();
  const auto start = Clock::now();
  const auto repeats = static_cast<std::size_t>(config.seeds.repeats);
  ExperimentOutput out;
  out.runs.resize(repeats);
  // parallel over repeats when there are several, otherwise over models
  const int outer = repeats > 1 ? jobs : 1;
  const int inner = repeats > 1 ? 1 : jobs;
  parallel_for(repeats, outer, [&](std::size_t r) {
    log(LogLevel::info, config.name + ": repeat " + std::to_string(r));
    out.runs[r] = run_one(config, static_cast<int>(r), inner);
  });
  out.summary = summarize(config, out.runs);
  out.summary["timing"] = {
      {"wall_clock_seconds", std::chrono::duration<double>(Clock::now() - start).count()}};
  return out;
}

std::vector<std::filesystem::path> write_outputs(const ExperimentOutput &output,
                                                 const ExperimentConfig &config,
                                                 const std::filesystem::path &dir) {
  std::vector<std::filesystem::path> written;
  for (const auto &run : output.runs) {
    const std::string stem = config.name + "_repeat" + std::to_string(run.repeat);
    written.push_back(dir / (stem + ".json"));
    write_text(written.back(), canonical_dump(run.result, false));
    for (const auto &plot : run.plots) {
      written.push_back(dir / (stem + "_" + plot.name + ".csv"));
      write_text(written.back(), plot.csv);
    }
  }
  written.push_back(dir / (config.name + "_summary.json"));
  write_text(written.back(), canonical_dump(output.summary, false));
  return written;
}

} // namespace avb::cli
