#include "avb/quasi/quasi_deep.hpp"

#include "avb/core/errors.hpp"
#include "avb/core/rng.hpp"

namespace avb::quasi {

QuasiDeepFit quasi_fit_deep(const std::vector<deep::NetArchitecture> &grid,
                            const deep::QuasiGaussianRegression &model,
                            const deep::TrainConfig &config, double b0) {
  if (grid.empty())
    throw ConfigError("architecture grid is empty");
  if (!(model.learning_rate > 0.0))
    throw ConfigError("learning rate must be positive");
  const deep::LikelihoodAdapter adapter{model};
  QuasiDeepFit out;
  out.collection =
      deep::architecture_collection(grid, b0, static_cast<std::size_t>(model.targets.size()));
  std::map<std::string, ModelFit> fits;
  for (const auto &arch : grid) {
    deep::TrainConfig c = config;
    c.seed = make_rng(config.seed, {stable_hash(arch.id())})();
    auto fit = deep::fit_model(arch, adapter, c);
    fits.emplace(arch.id(), ModelFit{fit.state, fit.elbo});
    out.fits.emplace(arch.id(), std::move(fit));
  }
  out.combined = combine_posteriors(out.collection, fits);
  return out;
}

} // namespace avb::quasi
