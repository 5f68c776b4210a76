#include "avb/compare/compare.hpp"

#include "avb/core/divergence.hpp"
#include "avb/core/errors.hpp"
#include "avb/core/numeric.hpp"

#include <cmath>
#include <limits>

namespace avb::compare {

SelectionResult select_model(const CombinedPosterior &combined, const ModelCollection &collection) {
  const auto m = static_cast<Eigen::Index>(combined.size());
  if (m == 0 || static_cast<std::size_t>(m) != collection.size())
    throw ShapeError("combined posterior does not match the collection");
  SelectionResult out;
  out.gamma = combined.gamma;
  out.selection_scores = combined.objectives() - combined.log_alpha;
  std::size_t best = 0;
  for (std::size_t i = 1; i < combined.size(); ++i) {
    const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(best);
    const double la = combined.log_gamma(a), lb = combined.log_gamma(b);
    if (la > lb) {
      best = i;
      continue;
    }
    if (la < lb)
      continue;
    const auto &mi = collection.model(collection.index_of(combined.model_ids[i]));
    const auto &mb = collection.model(collection.index_of(combined.model_ids[best]));
    if (mi.complexity < mb.complexity ||
        (mi.complexity == mb.complexity && mi.id < mb.id))
      best = i;
  }
  out.selected_index = best;
  out.selected_model = combined.model_ids[best];
  return out;
}

DominanceCheck objective_dominance(const CombinedPosterior &combined,
                                   const ModelCollection &collection,
                                   const SelectionResult &selection) {
  const Eigen::VectorXd e = combined.objectives();
  DominanceCheck out;
  out.avb_objective = elbo_of_combination(collection, combined.gamma, e);
  const auto k = static_cast<Eigen::Index>(selection.selected_index);
  out.msvb_objective = e(k) - combined.log_alpha(k);
  out.holds = out.avb_objective <= out.msvb_objective + 1e-10;
  return out;
}

double tv_combined_vs_selected(const CombinedPosterior &combined, const SelectionResult &selection) {
  return 1.0 - combined.gamma(static_cast<Eigen::Index>(selection.selected_index));
}

double total_variation(const Eigen::Ref<const Eigen::VectorXd> &p,
                       const Eigen::Ref<const Eigen::VectorXd> &q) {
  if (p.size() != q.size())
    throw ShapeError("measures on different supports");
  return 0.5 * (p - q).cwiseAbs().sum();
}

std::vector<double> default_upsilon_grid() {
  std::vector<double> grid(41);
  for (int i = 0; i < 41; ++i)
    grid[static_cast<std::size_t>(i)] = std::pow(10.0, -3.0 + 6.0 * i / 40.0);
  return grid;
}

RiskBound risk_bound_functional(const Eigen::Ref<const Eigen::VectorXd> &posterior,
                                const Eigen::Ref<const Eigen::VectorXd> &candidate,
                                const Eigen::Ref<const Eigen::VectorXd> &loss,
                                const std::vector<double> &upsilon_grid) {
  if (posterior.size() != candidate.size() || posterior.size() != loss.size())
    throw ShapeError("posterior, candidate and loss must share the atom set");
  if (upsilon_grid.empty())
    throw ConfigError("upsilon grid is empty");
  require_probability_vector(posterior, 1e-9, "posterior");
  require_probability_vector(candidate, 1e-9, "candidate");
  const double kl = kl_categorical(candidate, posterior);
  // only atoms with posterior mass enter the moment
  std::vector<Eigen::Index> support;
  for (Eigen::Index a = 0; a < posterior.size(); ++a)
    if (posterior(a) > 0.0)
      support.push_back(a);
  Eigen::VectorXd terms(static_cast<Eigen::Index>(support.size()));
  RiskBound out;
  out.value = std::numeric_limits<double>::infinity();
  for (const double u : upsilon_grid) {
    if (!(u > 0.0))
      throw ConfigError("upsilon grid must be positive");
    for (std::size_t s = 0; s < support.size(); ++s)
      terms(static_cast<Eigen::Index>(s)) =
          std::log(posterior(support[s])) + u * loss(support[s]);
    const double v = (kl + log_sum_exp(terms)) / u;
    out.per_upsilon.push_back(v);
    if (v < out.value) {
      out.value = v;
      out.upsilon = u;
    }
  }
  return out;
}

double expected_risk(const Eigen::Ref<const Eigen::VectorXd> &candidate,
                     const Eigen::Ref<const Eigen::VectorXd> &loss) {
  if (candidate.size() != loss.size())
    throw ShapeError("candidate and loss differ in length");
  return candidate.dot(loss);
}

} // namespace avb::compare
