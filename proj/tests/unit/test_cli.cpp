#include "avb/cli/config.hpp"
#include "avb/cli/csv.hpp"
#include "avb/cli/experiments.hpp"
#include "avb/cli/logging.hpp"
#include "avb/cli/serialize.hpp"
#include "avb/core/errors.hpp"
#include "avb/mixture/mixture.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace avb;
using namespace avb::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string &name) {
  const auto dir = fs::temp_directory_path() / ("avb_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json small_mixture() {
  return {{"kind", "mixture"},
          {"name", "mix"},
          {"dataset", {{"n", 80}}},
          {"grid", {1, 2, 3}},
          {"optimizer", {{"restarts", 2}, {"max_iters", 100}}},
          {"seeds", {{"master", 11}, {"repeats", 2}}},
          {"density_grid", 11}};
}

json small_deep(const std::string &kind = "deep_regression") {
  json doc = {{"kind", kind},
              {"name", "net"},
              {"dataset", {{"n", 40}}},
              {"grid", {{{"depth", 2}, {"width", 3}}, {{"depth", 2}, {"width", 5}}}},
              {"optimizer", {{"epochs", 20}, {"eval_samples", 16}, {"learning_rate", 1e-2}}},
              {"prior", {{"b0", 1e-5}}},
              {"seeds", {{"master", 3}}}};
  if (kind == "quasi_regression")
    doc["kappa"] = 0.5;
  return doc;
}

} // namespace

TEST_CASE("well formed regression CSV") {
  std::istringstream in("a,y,b\n1,10,4\n2,20,5\n3,30,9\n");
  const auto ds = read_regression_csv(in, "y");
  CHECK(ds.features.rows() == 3);
  CHECK(ds.features.cols() == 2);
  CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(ds.targets[2] == 30.0);
  CHECK(std::abs(ds.features.col(0).mean()) < 1e-15);
  CHECK(ds.features.col(0).squaredNorm() / 3 == doctest::Approx(1.0));
}

TEST_CASE("standardization round trip") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(5.0, 3.0);
  Eigen::MatrixXd x(50, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x.data()[i] = n(rng);
  x.col(3).setConstant(2.0); // constant column keeps scale 1
  const auto s = Standardizer::fit(x);
  CHECK(s.scale[3] == 1.0);
  CHECK((s.inverse(s.transform(x)) - x).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("CSV errors carry line numbers") {
  std::istringstream ragged("x,y\n1,2\n3,4\n5,6\n7,8\n9,10\n11\n13,14\n");
  try {
    (void)read_regression_csv(ragged, "y");
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(e.line() == 7);
  }
  std::istringstream word("x,y\n1,2\n3,abc\n");
  try {
    (void)read_regression_csv(word, "y");
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(e.line() == 3);
  }
  std::istringstream no_target("x,z\n1,2\n");
  CHECK_THROWS_AS((void)read_regression_csv(no_target, "y"), ParseError);
  CHECK_THROWS_AS((void)ingest_csv("/nonexistent/data.csv", "y"), ConfigError);
}

TEST_CASE("comments and blank lines are skipped") {
  std::istringstream in("# header follows\nx,y\n\n1,2\n# note\n3,4\n");
  CHECK(read_regression_csv(in, "y").features.rows() == 2);
}

TEST_CASE("edge lists") {
  std::istringstream in("# edges\n0,1\n2,1\n\n3,0\n");
  const auto g = read_edge_list(in);
  CHECK(g.nodes() == 4);
  CHECK(g(1, 0) == 1.0);
  CHECK(g(1, 2) == 1.0);
  CHECK(g(3, 2) == 0.0);
  std::istringstream padded("0,1\n");
  CHECK(read_edge_list(padded, 6).nodes() == 6);
  std::istringstream loop("1,1\n");
  CHECK_THROWS_AS((void)read_edge_list(loop), ParseError);
  std::istringstream bad("0;1\n");
  CHECK_THROWS_AS((void)read_edge_list(bad), ParseError);
}

TEST_CASE("config validation") {
  auto doc = small_mixture();
  CHECK_NOTHROW((void)parse_config(doc));
  doc["grid"] = json::array();
  CHECK_THROWS_WITH_AS((void)parse_config(doc), "model grid is empty", ConfigError);
  doc = small_mixture();
  doc["surprise"] = 1;
  CHECK_THROWS_AS((void)parse_config(doc), ConfigError);
  doc = small_mixture();
  doc["seeds"]["master"] = -1;
  CHECK_THROWS_AS((void)parse_config(doc), ConfigError);
  doc = small_mixture();
  doc["grid"] = {2, 2};
  CHECK_THROWS_AS((void)parse_config(doc), ConfigError);
  auto deep = small_deep();
  deep["grid"] = json::array();
  CHECK_THROWS_AS((void)parse_config(deep), ConfigError);
  deep = small_deep();
  deep["optimizer"]["name"] = "momentum";
  CHECK_THROWS_AS((void)parse_config(deep), ConfigError);
  deep = small_deep();
  deep["kind"] = "quasi_regression"; // no kappa
  CHECK_THROWS_AS((void)parse_config(deep), ConfigError);
  deep = small_deep();
  deep["dataset"] = {{"source", "csv"}, {"path", "missing.csv"}};
  CHECK_THROWS_AS((void)parse_config(deep, "/nonexistent"), ConfigError);
  CHECK_THROWS_AS((void)parse_kind("survey"), ConfigError);
}

TEST_CASE("config echo is a fixed point of parsing") {
  for (const auto &doc : {small_mixture(), small_deep(), small_deep("quasi_regression")}) {
    const auto c = parse_config(doc);
    const json echo = to_json(c);
    CHECK(to_json(parse_config(echo)) == echo);
  }
}

TEST_CASE("config files accept comments and resolve data paths") {
  const auto dir = scratch_dir("config");
  {
    std::ofstream data(dir / "d.csv");
    data << "x,y\n0.1,1\n0.2,2\n0.3,3\n0.4,4\n";
    std::ofstream cfg(dir / "c.json");
    cfg << "{\n  // a regression run\n  \"kind\": \"deep_regression\",\n"
           "  \"dataset\": {\"source\": \"csv\", \"path\": \"d.csv\"},\n"
           "  \"grid\": [{\"depth\": 2, \"width\": 2}]\n}\n";
  }
  const auto c = load_config(dir / "c.json");
  CHECK(c.dataset.path == dir / "d.csv");
  CHECK_THROWS_AS((void)load_config(dir / "absent.json"), ConfigError);
}

TEST_CASE("substreams and the parallel loop") {
  CHECK(substream_seed(1, 0, "data") == substream_seed(1, 0, "data"));
  CHECK(substream_seed(1, 0, "data") != substream_seed(1, 1, "data"));
  CHECK(substream_seed(1, 0, "data") != substream_seed(1, 0, "split"));

  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::count(hits.begin(), hits.end(), 1) == 100);

  std::atomic<int> ran{0};
  try {
    parallel_for(10, 3, [&](std::size_t i) {
      ++ran;
      if (i == 7 || i == 4)
        throw std::runtime_error("boom " + std::to_string(i));
    });
    FAIL("expected the worker error");
  } catch (const std::runtime_error &e) {
    CHECK(std::string(e.what()) == "boom 4");
  }
  CHECK(ran == 10);
}

TEST_CASE("log levels") {
  CHECK(parse_log_level("DEBUG") == LogLevel::debug);
  CHECK(parse_log_level("error") == LogLevel::error);
  CHECK(parse_log_level("loud") == LogLevel::warn);
}

TEST_CASE("failed fits are excluded and the prior renormalized") {
  const auto full = mixture::component_collection(std::vector<int>{1, 2, 3});
  std::vector<ModelOutcome> outcomes(3);
  for (int k = 0; k < 3; ++k)
    outcomes[static_cast<std::size_t>(k)].id = full.model(static_cast<std::size_t>(k)).id;
  outcomes[0].fit = ModelFit{mixture::MixtureVariationalState{}, ElboBreakdown::make(10.0, 1.0)};
  outcomes[1].error = "non-finite objective";
  outcomes[2].fit = ModelFit{mixture::MixtureVariationalState{}, ElboBreakdown::make(9.0, 1.5)};
  const auto a = assemble(full, outcomes, "test");
  CHECK(a.collection.size() == 2);
  CHECK(a.excluded.size() == 1);
  CHECK(a.excluded[0]["id"] == "m2");
  CHECK(std::abs(a.collection.alpha().sum() - 1.0) < 1e-12);
  const double ratio = full.alpha()[0] / full.alpha()[2];
  CHECK(a.collection.alpha()[0] / a.collection.alpha()[1] == doctest::Approx(ratio));
  CHECK(std::abs(a.combined.gamma.sum() - 1.0) < 1e-12);
  CHECK_FALSE(a.combined.warnings.empty());
  CHECK(a.dominance.holds);

  outcomes[0].fit.reset();
  outcomes[2].fit.reset();
  CHECK_THROWS_AS((void)assemble(full, outcomes, "test"), NumericalBreakdown);
}

TEST_CASE("mixture run: schema, replay, determinism, outputs") {
  const auto config = parse_config(small_mixture());
  const auto out = run_experiment(config, 1);
  REQUIRE(out.runs.size() == 2);
  const auto &r = out.runs[0].result;
  CHECK(r["schema"] == kSchemaName);
  CHECK(r["schema_version"] == kSchemaVersion);
  CHECK(r["experiment"]["repeat"] == 0);
  CHECK_FALSE(r["config"].contains("output_dir"));
  CHECK(r["posterior"]["models"].size() == 3);
  CHECK(r["posterior"]["dominance"]["holds"] == true);
  CHECK(r.contains("timing"));
  CHECK(r["metrics"].contains("gamma_entropy"));
  CHECK(r["posterior"]["models"][0]["elbo"]["mc_samples"] == 0);

  const auto rep = replay(r);
  CHECK(rep.ok);
  CHECK(rep.models == 3);
  json tampered = r;
  tampered["posterior"]["gamma"][0] = tampered["posterior"]["gamma"][0].get<double>() + 1e-6;
  CHECK_FALSE(replay(tampered).ok);

  const auto again = run_experiment(config, 2);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(canonical_dump(out.runs[i].result, true) == canonical_dump(again.runs[i].result, true));
  CHECK(canonical_dump(out.runs[0].result, true).find("wall_clock") == std::string::npos);

  const auto dir = scratch_dir("mixture");
  const auto written = write_outputs(out, config, dir);
  CHECK(fs::exists(dir / "mix_repeat0.json"));
  CHECK(fs::exists(dir / "mix_repeat1_density.csv"));
  CHECK(fs::exists(dir / "mix_summary.json"));
  CHECK(replay_file(dir / "mix_repeat1.json").ok);
  CHECK(out.summary["runs"].size() == 2);
  CHECK(out.summary["aggregates"]["gamma_entropy"]["count"] == 2);
  for (const auto &p : written)
    CHECK(fs::exists(p));
}

TEST_CASE("deep and quasi regression runs") {
  for (const auto *kind : {"deep_regression", "quasi_regression"}) {
    const auto config = parse_config(small_deep(kind));
    const auto out = run_experiment(config, 2);
    const auto &m = out.runs[0].result["metrics"];
    CHECK(m["rmse_avb"].get<double>() >= 0.0);
    CHECK(m["rmse_msvb"].get<double>() >= 0.0);
    CHECK(m.contains("rmse_avb_standardized"));
    CHECK(m["n_train"].get<int>() + m["n_test"].get<int>() == 40);
    CHECK(replay(out.runs[0].result).ok);
    const auto serial = run_experiment(config, 1);
    CHECK(canonical_dump(out.runs[0].result, true) == canonical_dump(serial.runs[0].result, true));
    CHECK(out.runs[0].result["posterior"]["models"][0]["elbo"]["mc_samples"] == 16);
  }
}

TEST_CASE("regression run from a CSV file") {
  const auto dir = scratch_dir("csvrun");
  {
    std::ofstream data(dir / "d.csv");
    data << "x1,x2,target\n";
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
      const double a = u(rng), b = u(rng);
      data << a << "," << 100 * b << "," << a - b << "\n";
    }
  }
  auto doc = small_deep();
  doc["dataset"] = {{"source", "csv"}, {"path", (dir / "d.csv").string()}, {"target", "target"}};
  const auto out = run_experiment(parse_config(doc), 1);
  const auto &fs_json = out.runs[0].result["metrics"]["feature_standardization"];
  CHECK(fs_json["names"] == json({"x1", "x2"}));
  CHECK(fs_json["scale"][1].get<double>() > 10.0);
}

TEST_CASE("sbm run") {
  json doc = {{"kind", "sbm"},
              {"dataset", {{"n", 30}, {"p_in", 0.9}, {"p_out", 0.05}}},
              {"grid", {1, 2, 3}},
              {"optimizer", {{"restarts", 2}}},
              {"seeds", {{"master", 4}}}};
  const auto out = run_experiment(parse_config(doc), 1);
  const auto &m = out.runs[0].result["metrics"];
  CHECK(m["nodes"] == 30);
  CHECK(m.contains("label_accuracy"));
  CHECK(out.runs[0].plots.size() == 1);
  CHECK(replay(out.runs[0].result).ok);
}

TEST_CASE("particle demo run") {
  json doc = {{"kind", "particle_demo"},
              {"dataset", {{"n", 30}, {"truth", {0.5, -1.0}}}},
              {"grid", {0, 1, 2}},
              {"optimizer", {{"spacing", 0.25}, {"bound", 1.5}}},
              {"seeds", {{"master", 9}}}};
  const auto out = run_experiment(parse_config(doc), 1);
  const auto &m = out.runs[0].result["metrics"];
  CHECK(m["risk_bound_avb"].get<double>() >= m["risk_avb"].get<double>() - 1e-10);
  CHECK(m["risk_bound_msvb"].get<double>() >= m["risk_msvb"].get<double>() - 1e-10);
  CHECK(m["tv_avb_vs_posterior"].get<double>() <= 1e-10);
  CHECK(replay(out.runs[0].result).ok);
}
