#include "avb/cli/serialize.hpp"

#include "avb/core/errors.hpp"
#include "avb/core/numeric.hpp"

#include <cmath>
#include <fstream>

#ifndef AVB_VERSION
#define AVB_VERSION "unknown"
#endif

namespace avb::cli {

using nlohmann::json;

std::string code_version() { return AVB_VERSION; }

json to_json(const ElboBreakdown &elbo) {
  json j = {{"expected_nll", elbo.expected_nll},
            {"kl_to_prior", elbo.kl_to_prior},
            {"total", elbo.total},
            {"mc_samples", elbo.mc_samples_used}};
  if (elbo.mc_seed)
    j["mc_seed"] = *elbo.mc_seed;
  return j;
}

namespace {

json vector_json(const Eigen::VectorXd &v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    a.push_back(v(i));
  return a;
}

} // namespace

json posterior_to_json(const ModelCollection &collection, const CombinedPosterior &combined,
                       const compare::SelectionResult &selection,
                       const compare::DominanceCheck &dominance) {
  json models = json::array();
  for (std::size_t i = 0; i < combined.size(); ++i) {
    const auto &id = combined.model_ids[i];
    const auto &entry = collection.model(collection.index_of(id));
    const auto k = static_cast<Eigen::Index>(i);
    models.push_back({{"id", id},
                      {"complexity", entry.complexity},
                      {"log_alpha", combined.log_alpha(k)},
                      {"elbo", to_json(combined.per_model_elbo.at(id))},
                      {"log_gamma", combined.log_gamma(k)},
                      {"gamma", combined.gamma(k)}});
  }
  return {{"models", models},
          {"gamma", vector_json(combined.gamma)},
          {"selection",
           {{"selected_model", selection.selected_model},
            {"scores", vector_json(selection.selection_scores)}}},
          {"dominance",
           {{"avb_objective", dominance.avb_objective},
            {"msvb_objective", dominance.msvb_objective},
            {"holds", dominance.holds}}},
          {"tv_combined_vs_selected", compare::tv_combined_vs_selected(combined, selection)},
          {"warnings", combined.warnings}};
}

ReplayReport replay(const json &result) {
  if (!result.contains("schema") || result.at("schema") != kSchemaName)
    throw ConfigError("not an avb result document");
  if (result.at("schema_version").get<int>() != kSchemaVersion)
    throw ConfigError("unsupported result schema version");
  const auto &post = result.at("posterior");
  const auto &models = post.at("models");
  const auto m = static_cast<Eigen::Index>(models.size());
  if (m == 0 || post.at("gamma").size() != models.size())
    throw ShapeError("stored γ does not match the stored models");
  Eigen::VectorXd log_alpha(m), e(m), stored(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto &mj = models.at(static_cast<std::size_t>(i));
    log_alpha(i) = mj.at("log_alpha").get<double>();
    e(i) = mj.at("elbo").at("total").get<double>();
    stored(i) = post.at("gamma").at(static_cast<std::size_t>(i)).get<double>();
  }
  // stored log α may be unnormalized after model exclusion
  log_normalize(log_alpha);
  const Eigen::VectorXd gamma = softmax(combined_log_weights(log_alpha, e));
  ReplayReport r;
  r.models = static_cast<std::size_t>(m);
  r.max_abs_diff = (gamma - stored).cwiseAbs().maxCoeff();
  r.ok = r.max_abs_diff <= 1e-12;
  return r;
}

ReplayReport replay_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return replay(doc);
}

std::string canonical_dump(json doc, bool strip_timing) {
  if (strip_timing)
    doc.erase("timing");
  return doc.dump(2) + "\n";
}

void write_text(const std::filesystem::path &path, const std::string &text) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out)
    throw ConfigError("write failed for " + path.string());
}

} // namespace avb::cli
