#include "avb/cli/config.hpp"

#include "avb/core/errors.hpp"
#include "avb/deep/variational.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace avb::cli {

using nlohmann::json;

ExperimentKind parse_kind(const std::string &name) {
  if (name == "mixture")
    return ExperimentKind::mixture;
  if (name == "deep_regression")
    return ExperimentKind::deep_regression;
  if (name == "sbm")
    return ExperimentKind::sbm;
  if (name == "particle_demo")
    return ExperimentKind::particle_demo;
  if (name == "quasi_regression")
    return ExperimentKind::quasi_regression;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
  case ExperimentKind::mixture:
    return "mixture";
  case ExperimentKind::deep_regression:
    return "deep_regression";
  case ExperimentKind::sbm:
    return "sbm";
  case ExperimentKind::particle_demo:
    return "particle_demo";
  case ExperimentKind::quasi_regression:
    return "quasi_regression";
  }
  return "unknown";
}

namespace {

bool uses_architectures(ExperimentKind k) {
  return k == ExperimentKind::deep_regression || k == ExperimentKind::quasi_regression;
}

void reject_unknown(const json &obj, const std::set<std::string> &allowed, const std::string &where) {
  if (!obj.is_object())
    throw ConfigError(where + " must be an object");
  for (const auto &[key, _] : obj.items())
    if (!allowed.contains(key))
      throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
void read(const json &obj, const char *key, T &out, const std::string &where) {
  if (!obj.contains(key))
    return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception &e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

std::uint64_t read_seed(const json &v, const std::string &what) {
  if (!v.is_number_integer())
    throw ConfigError(what + " must be an integer");
  if (v.is_number_unsigned())
    return v.get<std::uint64_t>();
  const auto s = v.get<std::int64_t>();
  if (s < 0)
    throw ConfigError(what + " must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

} // namespace

void ExperimentConfig::validate() const {
  if (uses_architectures(kind)) {
    if (architectures.empty())
      throw ConfigError("model grid is empty");
    for (const auto &[k, m] : architectures)
      if (k < 2 || m < 1)
        throw ConfigError("architectures need depth ≥ 2 and width ≥ 1");
  } else {
    if (sizes.empty())
      throw ConfigError("model grid is empty");
    const int lo = kind == ExperimentKind::particle_demo ? 0 : 1;
    for (const int m : sizes)
      if (m < lo)
        throw ConfigError("grid entries must be at least " + std::to_string(lo));
    if (std::set<int>(sizes.begin(), sizes.end()).size() != sizes.size())
      throw ConfigError("grid entries must be distinct");
  }
  if (seeds.repeats < 1)
    throw ConfigError("seeds.repeats must be at least 1");
  if (dataset.source != "builtin" && dataset.source != "csv")
    throw ConfigError("dataset.source must be 'builtin' or 'csv'");
  if (dataset.source == "csv") {
    if (kind == ExperimentKind::mixture || kind == ExperimentKind::particle_demo)
      throw ConfigError(to_string(kind) + " experiments use the builtin generator only");
    if (!std::filesystem::exists(dataset.path))
      throw ConfigError("dataset file does not exist: " + dataset.path.string());
  }
  if (dataset.noise_kind != "gaussian" && dataset.noise_kind != "uniform")
    throw ConfigError("dataset.noise_kind must be 'gaussian' or 'uniform'");
  if (dataset.source == "builtin" && dataset.n < 2)
    throw ConfigError("dataset.n must be at least 2");
  if (!(dataset.noise >= 0.0) || !(dataset.p_in >= 0.0 && dataset.p_in <= 1.0) ||
      !(dataset.p_out >= 0.0 && dataset.p_out <= 1.0) || dataset.blocks < 1)
    throw ConfigError("invalid builtin generator settings");
  if (!(prior.b0 >= 0.0) || !(prior.exponent > 0.0))
    throw ConfigError("prior.b0 must be ≥ 0 and prior.exponent > 0");
  if (prior.bound && !(*prior.bound > 0.0))
    throw ConfigError("prior.bound must be positive");
  if (kind == ExperimentKind::quasi_regression && !kappa)
    throw ConfigError("quasi_regression needs kappa");
  if (kappa && !(*kappa > 0.0))
    throw ConfigError("kappa must be positive");
  if (variance_proxy && !(*variance_proxy > 0.0))
    throw ConfigError("variance_proxy must be positive");
  if (predict_draws < 1 || !(test_fraction > 0.0 && test_fraction < 1.0) || density_grid < 2)
    throw ConfigError("predict_draws ≥ 1, test_fraction in (0,1), density_grid ≥ 2 required");
  if (uses_architectures(kind)) {
    deep::TrainConfig t;
    t.epochs = optimizer.epochs;
    t.learning_rate = optimizer.learning_rate;
    t.mc_samples = optimizer.mc_samples;
    t.eval_samples = optimizer.eval_samples;
    t.optimizer = deep::parse_optimizer(optimizer.name);
    t.init_half_width_fraction = optimizer.init_half_width_fraction;
    t.init_center_spread = optimizer.init_center_spread;
    t.validate();
  }
  if (optimizer.max_iters < 1 || !(optimizer.tol >= 0.0) || optimizer.restarts < 1)
    throw ConfigError("optimizer.max_iters ≥ 1, tol ≥ 0, restarts ≥ 1 required");
  if (kind == ExperimentKind::particle_demo) {
    if (!(optimizer.spacing > 0.0) || !(optimizer.bound > 0.0) || optimizer.iterations < 0 ||
        !(optimizer.particle_learning_rate >= 0.0))
      throw ConfigError("particle settings need spacing > 0, bound > 0, iterations ≥ 0");
    if (dataset.truth.empty())
      throw ConfigError("dataset.truth must list polynomial coefficients");
  }
}

ExperimentConfig parse_config(const json &doc, const std::filesystem::path &base_dir) {
  reject_unknown(doc,
                 {"name", "kind", "dataset", "grid", "optimizer", "prior", "seeds", "kappa",
                  "variance_proxy", "output_dir", "predict_draws", "test_fraction", "density_grid"},
                 "config");
  ExperimentConfig c;
  if (!doc.contains("kind"))
    throw ConfigError("config needs a kind");
  c.kind = parse_kind(doc.at("kind").get<std::string>());
  c.name = to_string(c.kind);
  read(doc, "name", c.name, "config");

  if (doc.contains("dataset")) {
    const auto &d = doc.at("dataset");
    reject_unknown(d, {"source", "path", "target", "n", "noise", "noise_kind", "blocks", "p_in",
                       "p_out", "truth"},
                   "dataset");
    read(d, "source", c.dataset.source, "dataset");
    std::string path;
    read(d, "path", path, "dataset");
    if (!path.empty()) {
      c.dataset.path = path;
      if (c.dataset.path.is_relative() && !base_dir.empty())
        c.dataset.path = base_dir / c.dataset.path;
    }
    read(d, "target", c.dataset.target, "dataset");
    read(d, "n", c.dataset.n, "dataset");
    read(d, "noise", c.dataset.noise, "dataset");
    read(d, "noise_kind", c.dataset.noise_kind, "dataset");
    read(d, "blocks", c.dataset.blocks, "dataset");
    read(d, "p_in", c.dataset.p_in, "dataset");
    read(d, "p_out", c.dataset.p_out, "dataset");
    read(d, "truth", c.dataset.truth, "dataset");
  }

  if (!doc.contains("grid") || !doc.at("grid").is_array())
    throw ConfigError("config needs a grid array");
  for (const auto &g : doc.at("grid")) {
    if (uses_architectures(c.kind)) {
      reject_unknown(g, {"depth", "width"}, "grid entry");
      if (!g.contains("depth") || !g.contains("width"))
        throw ConfigError("grid entries need depth and width");
      c.architectures.emplace_back(g.at("depth").get<int>(), g.at("width").get<int>());
    } else {
      if (!g.is_number_integer())
        throw ConfigError("grid entries must be integers");
      c.sizes.push_back(g.get<int>());
    }
  }

  if (doc.contains("optimizer")) {
    const auto &o = doc.at("optimizer");
    reject_unknown(o, {"epochs", "learning_rate", "mc_samples", "eval_samples", "name", "batch_size",
                       "init_half_width_fraction", "init_center_spread", "max_iters", "tol",
                       "restarts", "particles", "iterations", "particle_learning_rate", "spacing",
                       "bound"},
                   "optimizer");
    auto &t = c.optimizer;
    read(o, "epochs", t.epochs, "optimizer");
    read(o, "learning_rate", t.learning_rate, "optimizer");
    read(o, "mc_samples", t.mc_samples, "optimizer");
    read(o, "eval_samples", t.eval_samples, "optimizer");
    read(o, "name", t.name, "optimizer");
    read(o, "batch_size", t.batch_size, "optimizer");
    read(o, "init_half_width_fraction", t.init_half_width_fraction, "optimizer");
    read(o, "init_center_spread", t.init_center_spread, "optimizer");
    read(o, "max_iters", t.max_iters, "optimizer");
    read(o, "tol", t.tol, "optimizer");
    read(o, "restarts", t.restarts, "optimizer");
    read(o, "particles", t.particles, "optimizer");
    read(o, "iterations", t.iterations, "optimizer");
    read(o, "particle_learning_rate", t.particle_learning_rate, "optimizer");
    read(o, "spacing", t.spacing, "optimizer");
    read(o, "bound", t.bound, "optimizer");
  }
  if (doc.contains("prior")) {
    const auto &p = doc.at("prior");
    reject_unknown(p, {"b0", "exponent", "bound"}, "prior");
    read(p, "b0", c.prior.b0, "prior");
    read(p, "exponent", c.prior.exponent, "prior");
    if (p.contains("bound"))
      c.prior.bound = p.at("bound").get<double>();
  }
  if (doc.contains("seeds")) {
    const auto &s = doc.at("seeds");
    reject_unknown(s, {"master", "repeats"}, "seeds");
    if (s.contains("master"))
      c.seeds.master = read_seed(s.at("master"), "seeds.master");
    read(s, "repeats", c.seeds.repeats, "seeds");
  }
  if (doc.contains("kappa"))
    c.kappa = doc.at("kappa").get<double>();
  if (doc.contains("variance_proxy"))
    c.variance_proxy = doc.at("variance_proxy").get<double>();
  std::string out;
  read(doc, "output_dir", out, "config");
  if (!out.empty())
    c.output_dir = out;
  read(doc, "predict_draws", c.predict_draws, "config");
  read(doc, "test_fraction", c.test_fraction, "config");
  read(doc, "density_grid", c.density_grid, "config");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error &e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

json to_json(const ExperimentConfig &c) {
  json grid = json::array();
  if (uses_architectures(c.kind))
    for (const auto &[k, m] : c.architectures)
      grid.push_back({{"depth", k}, {"width", m}});
  else
    for (const int m : c.sizes)
      grid.push_back(m);
  const auto &o = c.optimizer;
  json doc = {
      {"name", c.name},
      {"kind", to_string(c.kind)},
      {"dataset",
       {{"source", c.dataset.source},
        {"path", c.dataset.path.string()},
        {"target", c.dataset.target},
        {"n", c.dataset.n},
        {"noise", c.dataset.noise},
        {"noise_kind", c.dataset.noise_kind},
        {"blocks", c.dataset.blocks},
        {"p_in", c.dataset.p_in},
        {"p_out", c.dataset.p_out},
        {"truth", c.dataset.truth}}},
      {"grid", grid},
      {"optimizer",
       {{"epochs", o.epochs},
        {"learning_rate", o.learning_rate},
        {"mc_samples", o.mc_samples},
        {"eval_samples", o.eval_samples},
        {"name", o.name},
        {"batch_size", o.batch_size},
        {"init_half_width_fraction", o.init_half_width_fraction},
        {"init_center_spread", o.init_center_spread},
        {"max_iters", o.max_iters},
        {"tol", o.tol},
        {"restarts", o.restarts},
        {"particles", o.particles},
        {"iterations", o.iterations},
        {"particle_learning_rate", o.particle_learning_rate},
        {"spacing", o.spacing},
        {"bound", o.bound}}},
      {"prior", {{"b0", c.prior.b0}, {"exponent", c.prior.exponent}}},
      {"seeds", {{"master", c.seeds.master}, {"repeats", c.seeds.repeats}}},
      {"output_dir", c.output_dir.string()},
      {"predict_draws", c.predict_draws},
      {"test_fraction", c.test_fraction},
      {"density_grid", c.density_grid},
  };
  if (c.prior.bound)
    doc["prior"]["bound"] = *c.prior.bound;
  if (c.kappa)
    doc["kappa"] = *c.kappa;
  if (c.variance_proxy)
    doc["variance_proxy"] = *c.variance_proxy;
  return doc;
}

} // namespace avb::cli
