#include "avb/core/model_collection.hpp"

#include "avb/core/errors.hpp"
#include "avb/core/numeric.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace avb {

ModelCollection::ModelCollection(std::vector<ModelEntry> models,
                                 const Eigen::VectorXd &alpha,
                                 double prior_exponent, double b0)
    : models_(std::move(models)), alpha_(alpha),
      prior_exponent_(prior_exponent), b0_(b0) {
  if (static_cast<std::size_t>(alpha_.size()) != models_.size())
    throw ShapeError("alpha length differs from model count");
  check_ids();
  require_probability_vector(alpha_, Tolerances{}.probability_sum, "alpha");
  log_alpha_ = alpha_.array().log();
}

ModelCollection ModelCollection::from_complexity(std::vector<ModelEntry> models,
                                                 double b0,
                                                 double prior_exponent,
                                                 double scale) {
  Eigen::VectorXd log_w(static_cast<Eigen::Index>(models.size()));
  for (std::size_t i = 0; i < models.size(); ++i) {
    const double zeta = models[i].complexity;
    if (!(zeta >= 0.0))
      throw ConfigError("complexity score must be nonnegative");
    log_w(static_cast<Eigen::Index>(i)) = -b0 * prior_exponent * scale * zeta * zeta;
  }
  return from_log_weights(std::move(models), log_w, prior_exponent, b0);
}

ModelCollection ModelCollection::from_log_weights(std::vector<ModelEntry> models,
                                                  const Eigen::VectorXd &log_weights,
                                                  double prior_exponent,
                                                  double b0) {
  if (static_cast<std::size_t>(log_weights.size()) != models.size())
    throw ShapeError("log-weight length differs from model count");
  if (models.empty())
    throw ConfigError("model collection is empty");
  if (!log_weights.allFinite())
    throw NonFiniteObjective("non-finite prior log-weight");
  ModelCollection out;
  out.models_ = std::move(models);
  out.prior_exponent_ = prior_exponent;
  out.b0_ = b0;
  out.check_ids();
  out.log_alpha_ = log_weights;
  log_normalize(out.log_alpha_);
  out.alpha_ = out.log_alpha_.unaryExpr([](double v) { return std::exp(v); });
  return out;
}

std::size_t ModelCollection::index_of(const std::string &id) const {
  for (std::size_t i = 0; i < models_.size(); ++i)
    if (models_[i].id == id)
      return i;
  throw std::out_of_range("unknown model id '" + id + "'");
}

bool ModelCollection::contains(const std::string &id) const noexcept {
  for (const auto &m : models_)
    if (m.id == id)
      return true;
  return false;
}

void ModelCollection::check_ids() const {
  if (models_.empty())
    throw ConfigError("model collection is empty");
  std::set<std::string> seen;
  for (const auto &m : models_)
    if (!seen.insert(m.id).second)
      throw ConfigError("duplicate model id '" + m.id + "'");
}

} // namespace avb
