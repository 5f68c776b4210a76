#include "avb/particle/particle.hpp"

#include "avb/core/errors.hpp"
#include "avb/core/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace avb::particle {

Proposal uniform_unoccupied(const DiscretizedSpace &space) {
  const std::uint64_t n = space.atom_count();
  return [n](Rng &rng, const std::unordered_set<AtomIndex> &occupied) -> AtomIndex {
    if (occupied.size() >= n)
      throw CapacityError("no unoccupied atom left to propose");
    if (occupied.size() < n / 2) {
      std::uniform_int_distribution<AtomIndex> pick(0, n - 1);
      for (;;) {
        const AtomIndex a = pick(rng);
        if (!occupied.contains(a))
          return a;
      }
    }
    std::vector<AtomIndex> free;
    free.reserve(static_cast<std::size_t>(n - occupied.size()));
    for (AtomIndex a = 0; a < n; ++a)
      if (!occupied.contains(a))
        free.push_back(a);
    std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
    return free[pick(rng)];
  };
}

double particle_objective(const ParticleState &state,
                          const Eigen::Ref<const Eigen::VectorXd> &loglik) {
  return particle_breakdown(state, loglik).total;
}

ElboBreakdown particle_breakdown(const ParticleState &state,
                                 const Eigen::Ref<const Eigen::VectorXd> &loglik) {
  const auto q = static_cast<Eigen::Index>(state.particle_count());
  if (loglik.size() != q || state.weights.size() != q)
    throw ShapeError("log-likelihood count differs from particle count");
  const double log_n = std::log(static_cast<double>(state.atom_count));
  double nll = 0.0, kl = 0.0;
  for (Eigen::Index i = 0; i < q; ++i) {
    const double w = state.weights(i);
    if (w == 0.0)
      continue;
    nll -= w * loglik(i);
    kl += w * (std::log(w) + log_n);
  }
  return ElboBreakdown::make(nll, kl);
}

ParticleState weight_update(ParticleState state, const Eigen::Ref<const Eigen::VectorXd> &loglik) {
  if (loglik.size() != static_cast<Eigen::Index>(state.particle_count()))
    throw ShapeError("log-likelihood count differs from particle count");
  if (!loglik.allFinite())
    throw NonFiniteObjective("non-finite particle log-likelihood");
  state.weights = softmax(loglik);
  return state;
}

std::vector<AtomIndex> tie_break(const DiscretizedSpace &space,
                                 const std::vector<AtomIndex> &proposed,
                                 const Eigen::Ref<const Eigen::VectorXd> &weights,
                                 Rng &rng, const Proposal &proposal) {
  if (weights.size() != static_cast<Eigen::Index>(proposed.size()))
    throw ShapeError("weight count differs from particle count");
  if (proposed.size() > space.atom_count())
    throw CapacityError("more particles than atoms");
  const Proposal draw = proposal ? proposal : uniform_unoccupied(space);
  // keeper of each tie group: maximal weight, lowest index among equals
  std::map<AtomIndex, std::size_t> keeper;
  for (std::size_t q = 0; q < proposed.size(); ++q) {
    auto [it, inserted] = keeper.emplace(proposed[q], q);
    if (!inserted && weights(static_cast<Eigen::Index>(q)) >
                         weights(static_cast<Eigen::Index>(it->second)))
      it->second = q;
  }
  std::unordered_set<AtomIndex> occupied(proposed.begin(), proposed.end());
  std::vector<AtomIndex> out = proposed;
  for (std::size_t q = 0; q < proposed.size(); ++q) {
    if (keeper.at(proposed[q]) == q)
      continue;
    const AtomIndex fresh = draw(rng, occupied);
    if (fresh >= space.atom_count() || occupied.contains(fresh))
      throw CapacityError("proposal returned an occupied or invalid atom");
    occupied.insert(fresh);
    out[q] = fresh;
  }
  return out;
}

namespace {

Eigen::VectorXd evaluate_logliks(const ParticleState &state, const ParticleModel &model) {
  Eigen::VectorXd ll(static_cast<Eigen::Index>(state.particle_count()));
  for (Eigen::Index q = 0; q < ll.size(); ++q)
    ll(q) = model.log_likelihood(state.coordinates.col(q));
  if (!ll.allFinite())
    throw NonFiniteObjective("non-finite particle log-likelihood");
  return ll;
}

void set_centers(ParticleState &state, const DiscretizedSpace &space,
                 std::vector<AtomIndex> centers) {
  state.centers = std::move(centers);
  state.coordinates.resize(space.dim(), static_cast<Eigen::Index>(state.centers.size()));
  for (std::size_t q = 0; q < state.centers.size(); ++q)
    state.coordinates.col(static_cast<Eigen::Index>(q)) = space.atom(state.centers[q]);
}

} // namespace

ParticleState make_state(const DiscretizedSpace &space, std::vector<AtomIndex> centers,
                         const ParticleModel &model) {
  if (centers.empty())
    throw ConfigError("need at least one particle");
  if (centers.size() > space.atom_count())
    throw CapacityError("more particles than atoms");
  std::unordered_set<AtomIndex> seen;
  for (const auto c : centers)
    if (c >= space.atom_count() || !seen.insert(c).second)
      throw ConfigError("particle centers must be distinct atoms");
  ParticleState state;
  state.atom_count = space.atom_count();
  set_centers(state, space, std::move(centers));
  const Eigen::VectorXd ll = evaluate_logliks(state, model);
  return weight_update(std::move(state), ll);
}

ParticleFit run_algorithm2(const DiscretizedSpace &space, const ParticleModel &model,
                           const ParticleConfig &config,
                           std::optional<std::vector<AtomIndex>> initial,
                           const Proposal &proposal) {
  if (config.particles < 1)
    throw ConfigError("need at least one particle");
  if (config.particles > space.atom_count())
    throw CapacityError("particle count " + std::to_string(config.particles) +
                        " exceeds atom count " + std::to_string(space.atom_count()));
  if (config.iterations < 0 || !(config.learning_rate >= 0.0))
    throw ConfigError("iterations and learning rate must be nonnegative");
  const bool moves = config.learning_rate > 0.0;
  if (moves && !model.log_likelihood_gradient)
    throw ConfigError("a positive learning rate needs a likelihood gradient");
  Rng rng = make_rng(config.seed, {stable_hash("particles")});
  const Proposal draw = proposal ? proposal : uniform_unoccupied(space);

  std::vector<AtomIndex> centers;
  if (initial) {
    centers = std::move(*initial);
    if (centers.size() != config.particles)
      throw ConfigError("initial center count differs from the particle count");
  } else if (config.particles == space.atom_count()) {
    centers.resize(config.particles);
    std::iota(centers.begin(), centers.end(), AtomIndex{0});
  } else {
    std::unordered_set<AtomIndex> occupied;
    for (std::size_t q = 0; q < config.particles; ++q) {
      const AtomIndex a = draw(rng, occupied);
      occupied.insert(a);
      centers.push_back(a);
    }
  }

  ParticleFit fit;
  fit.state = make_state(space, std::move(centers), model);
  Eigen::VectorXd ll = evaluate_logliks(fit.state, model);
  fit.trace.push_back(particle_objective(fit.state, ll));
  const auto q_count = static_cast<Eigen::Index>(config.particles);
  Eigen::VectorXd grad(space.dim());
  for (int t = 1; t <= config.iterations; ++t) {
    if (moves) {
      const double rate = config.schedule == Schedule::inverse_sqrt
                              ? config.learning_rate / std::sqrt(static_cast<double>(t))
                              : config.learning_rate;
      std::vector<AtomIndex> proposed(config.particles);
      for (Eigen::Index q = 0; q < q_count; ++q) {
        const Eigen::VectorXd psi = fit.state.coordinates.col(q);
        grad.setZero();
        model.log_likelihood_gradient(psi, grad);
        if (!grad.allFinite())
          throw NonFiniteObjective("non-finite gradient at particle " + std::to_string(q));
        // descent on −log q_n
        proposed[static_cast<std::size_t>(q)] = space.project(psi + rate * grad);
      }
      set_centers(fit.state, space,
                  tie_break(space, proposed, fit.state.weights, rng, draw));
      ll = evaluate_logliks(fit.state, model);
    }
    fit.state = weight_update(std::move(fit.state), ll);
    fit.trace.push_back(particle_objective(fit.state, ll));
  }
  fit.elbo = particle_breakdown(fit.state, ll);
  return fit;
}

} // namespace avb::particle
