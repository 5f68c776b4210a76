#include "avb/core/combine.hpp"

#include "avb/core/errors.hpp"
#include "avb/core/numeric.hpp"

#include <cmath>

namespace avb {

Eigen::VectorXd CombinedPosterior::objectives() const {
  Eigen::VectorXd e(static_cast<Eigen::Index>(model_ids.size()));
  for (std::size_t i = 0; i < model_ids.size(); ++i)
    e(static_cast<Eigen::Index>(i)) = per_model_elbo.at(model_ids[i]).total;
  return e;
}

Eigen::VectorXd combined_log_weights(const Eigen::Ref<const Eigen::VectorXd> &log_alpha,
                                     const Eigen::Ref<const Eigen::VectorXd> &objectives) {
  if (log_alpha.size() != objectives.size())
    throw ShapeError("log alpha and objectives differ in length");
  if (!objectives.allFinite())
    throw NonFiniteObjective("non-finite objective total");
  Eigen::VectorXd log_gamma = log_alpha - objectives;
  log_normalize(log_gamma);
  return log_gamma;
}

CombinedPosterior combine_posteriors(const ModelCollection &collection,
                                     const std::map<std::string, ModelFit> &fits) {
  CombinedPosterior out;
  const auto n = static_cast<Eigen::Index>(collection.size());
  Eigen::VectorXd objectives(n);
  const ElboBreakdown *reference = nullptr;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto &id = collection.model(static_cast<std::size_t>(i)).id;
    const auto it = fits.find(id);
    if (it == fits.end())
      throw MissingModelFit(id);
    if (!std::isfinite(it->second.elbo.total))
      throw NonFiniteObjective("non-finite objective for model '" + id + "'");
    objectives(i) = it->second.elbo.total;
    if (reference == nullptr)
      reference = &it->second.elbo;
    else if (!comparable(*reference, it->second.elbo))
      out.warnings.push_back("objective of model '" + id +
                             "' uses different Monte Carlo settings");
    out.model_ids.push_back(id);
    out.components.emplace(id, it->second.state);
    out.per_model_elbo.emplace(id, it->second.elbo);
  }
  out.log_alpha = collection.log_alpha();
  out.log_gamma = combined_log_weights(out.log_alpha, objectives);
  out.gamma = out.log_gamma.unaryExpr([](double v) { return std::exp(v); });
  return out;
}

} // namespace avb
