#include "avb/quasi/sbm.hpp"

#include "avb/core/errors.hpp"
#include "avb/core/numeric.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace avb::quasi {

SbmData::SbmData(const Eigen::MatrixXd &adjacency) {
  if (adjacency.rows() != adjacency.cols())
    throw ShapeError("adjacency matrix must be square");
  const auto n = adjacency.rows();
  y_ = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = adjacency(i, j);
      if (v != 0.0 && v != 1.0)
        throw ShapeError("adjacency entries must be 0 or 1");
      y_(i, j) = y_(j, i) = v;
    }
}

SbmData SbmData::from_edges(int n, const std::vector<std::pair<int, int>> &edges) {
  if (n < 2)
    throw ShapeError("a graph needs at least two nodes");
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, n);
  for (const auto &[a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n || a == b)
      throw ShapeError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                       ") outside the node range or a self-loop");
    y(std::max(a, b), std::min(a, b)) = 1.0;
  }
  return SbmData(y);
}

std::vector<std::pair<int, int>> SbmData::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < nodes(); ++i)
    for (int j = 0; j < i; ++j)
      if (y_(i, j) == 1.0)
        out.emplace_back(i, j);
  return out;
}

ModelCollection sbm_collection(const std::vector<int> &sizes, int n, double b0) {
  if (sizes.empty() || n < 2 || !(b0 >= 0.0))
    throw ConfigError("sbm collection needs a nonempty grid, n ≥ 2, b0 ≥ 0");
  std::vector<ModelEntry> models;
  Eigen::VectorXd log_w(static_cast<Eigen::Index>(sizes.size()));
  const double log_n = std::log(static_cast<double>(n));
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double m = sizes[i];
    if (sizes[i] < 1)
      throw ConfigError("community counts must be positive");
    models.push_back({SbmModelSpec{sizes[i]}.id(), "Unif(0,1) connectivity, Cat(1/m) labels",
                      m * m * log_n + n * std::log(m)});
    log_w(static_cast<Eigen::Index>(i)) = -b0 * models.back().complexity;
  }
  return ModelCollection::from_log_weights(std::move(models), log_w, 1.0, b0);
}

ModelCollection sbm_collection(int max_m, int n, double b0) {
  if (max_m < 1)
    throw ConfigError("sbm collection needs max_m ≥ 1");
  std::vector<int> sizes(static_cast<std::size_t>(max_m));
  std::iota(sizes.begin(), sizes.end(), 1);
  return sbm_collection(sizes, n, b0);
}

namespace {

void check_connectivity(const Eigen::MatrixXd &u) {
  if (u.rows() != u.cols())
    throw ShapeError("connectivity matrix must be square");
  if ((u - u.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw ShapeError("connectivity matrix must be symmetric");
  if (u.minCoeff() < 0.0 || u.maxCoeff() > 1.0)
    throw ShapeError("connectivity entries must lie in [0,1]");
}

double mean_of(double a, double b) { return 0.5 * (a + b); }
double second_moment(double a, double b) { return (a * a + a * b + b * b) / 3.0; }

} // namespace

double sbm_quasi_loglik(const SbmData &data, const Eigen::MatrixXd &connectivity,
                        const std::vector<int> &labels) {
  check_connectivity(connectivity);
  if (static_cast<int>(labels.size()) != data.nodes())
    throw ShapeError("label count differs from node count");
  const auto m = static_cast<int>(connectivity.rows());
  for (const int z : labels)
    if (z < 0 || z >= m)
      throw ShapeError("label outside the community range");
  double acc = 0.0;
  for (int i = 0; i < data.nodes(); ++i)
    for (int j = 0; j < i; ++j) {
      const double r = data(i, j) - connectivity(labels[i], labels[j]);
      acc += r * r;
    }
  return -acc;
}

double sbm_quasi_loglik(const SbmData &data, const Eigen::MatrixXd &connectivity,
                        const Eigen::MatrixXd &labels_one_hot) {
  if (labels_one_hot.rows() != data.nodes() || labels_one_hot.cols() != connectivity.rows())
    throw ShapeError("label matrix must be n × m");
  std::vector<int> labels(static_cast<std::size_t>(data.nodes()));
  for (int i = 0; i < data.nodes(); ++i) {
    int hot = -1;
    for (Eigen::Index k = 0; k < labels_one_hot.cols(); ++k) {
      const double v = labels_one_hot(i, k);
      if (v == 1.0 && hot < 0)
        hot = static_cast<int>(k);
      else if (v != 0.0)
        throw ShapeError("label rows must be one-hot");
    }
    if (hot < 0)
      throw ShapeError("label rows must be one-hot");
    labels[static_cast<std::size_t>(i)] = hot;
  }
  return sbm_quasi_loglik(data, connectivity, labels);
}

namespace {

void check_state(const SbmData &data, const SbmVariationalState &s) {
  const auto m = s.lower.rows();
  if (m < 1 || s.lower.cols() != m || s.upper.rows() != m || s.upper.cols() != m ||
      s.label_probs.rows() != data.nodes() || s.label_probs.cols() != m)
    throw ShapeError("sbm state shapes do not match the data");
}

/// Block weights of the expected loss: Σ pairs A_kh E[U²] − 2 C_kh E[U], k ≤ h.
struct BlockCoefficients {
  Eigen::MatrixXd pair_mass;   // A
  Eigen::MatrixXd edge_mass;   // C
};

BlockCoefficients block_coefficients(const SbmData &data, const Eigen::MatrixXd &nu) {
  const Eigen::VectorXd c = nu.colwise().sum().transpose();
  const Eigen::MatrixXd ordered = c * c.transpose() - nu.transpose() * nu;
  const Eigen::MatrixXd edges = nu.transpose() * data.adjacency() * nu;
  const auto m = nu.cols();
  BlockCoefficients out{Eigen::MatrixXd::Zero(m, m), Eigen::MatrixXd::Zero(m, m)};
  // unordered pairs: diagonal blocks count each pair twice in the ordered sums
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index h = k; h < m; ++h) {
      out.pair_mass(k, h) = k == h ? 0.5 * ordered(k, k) : 0.5 * (ordered(k, h) + ordered(h, k));
      out.edge_mass(k, h) = k == h ? 0.5 * edges(k, k) : 0.5 * (edges(k, h) + edges(h, k));
    }
  return out;
}

double block_term(double a_mass, double c_mass, double a, double b) {
  return a_mass * second_moment(a, b) - 2.0 * c_mass * mean_of(a, b) - std::log(b - a);
}

void project_interval(double &a, double &b, double gap) {
  a = std::clamp(a, 0.0, 1.0);
  b = std::clamp(b, 0.0, 1.0);
  if (b - a < gap) {
    const double mid = std::clamp(0.5 * (a + b), 0.5 * gap, 1.0 - 0.5 * gap);
    a = mid - 0.5 * gap;
    b = mid + 0.5 * gap;
  }
}

void update_intervals(const SbmData &data, SbmVariationalState &s, const SbmFitConfig &config) {
  const auto coef = block_coefficients(data, s.label_probs);
  const auto m = s.lower.rows();
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index h = k; h < m; ++h) {
      const double am = coef.pair_mass(k, h), cm = coef.edge_mass(k, h);
      double a = s.lower(k, h), b = s.upper(k, h);
      double f = block_term(am, cm, a, b);
      double step = 1.0 / (1.0 + am);
      for (int it = 0; it < config.interval_steps; ++it) {
        const double w = b - a;
        const double ga = am * (2.0 * a + b) / 3.0 - cm + 1.0 / w;
        const double gb = am * (a + 2.0 * b) / 3.0 - cm - 1.0 / w;
        bool moved = false;
        while (step > 1e-18) {
          double na = a - step * ga, nb = b - step * gb;
          project_interval(na, nb, config.min_gap);
          const double nf = block_term(am, cm, na, nb);
          if (std::isfinite(nf) && nf <= f) {
            moved = std::abs(na - a) + std::abs(nb - b) > 1e-15;
            a = na;
            b = nb;
            f = nf;
            step *= 2.0;
            break;
          }
          step *= 0.5;
        }
        if (!moved)
          break;
      }
      s.lower(k, h) = s.lower(h, k) = a;
      s.upper(k, h) = s.upper(h, k) = b;
    }
}

void update_labels(const SbmData &data, SbmVariationalState &s) {
  const auto m = s.lower.cols();
  Eigen::MatrixXd mu(m, m), sec(m, m);
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index h = 0; h < m; ++h) {
      mu(k, h) = mean_of(s.lower(k, h), s.upper(k, h));
      sec(k, h) = second_moment(s.lower(k, h), s.upper(k, h));
    }
  Eigen::RowVectorXd total = s.label_probs.colwise().sum();
  Eigen::VectorXd score(m);
  for (int i = 0; i < data.nodes(); ++i) {
    const Eigen::RowVectorXd others = total - s.label_probs.row(i);
    const Eigen::RowVectorXd linked = data.adjacency().row(i) * s.label_probs;
    score = -(sec * others.transpose()) + 2.0 * (mu * linked.transpose());
    if (!score.allFinite())
      throw NumericalBreakdown("non-finite label score", i);
    const Eigen::RowVectorXd fresh = softmax(score).transpose();
    total += fresh - s.label_probs.row(i);
    s.label_probs.row(i) = fresh;
  }
}

} // namespace

ElboBreakdown sbm_objective(const SbmData &data, const SbmVariationalState &s) {
  check_state(data, s);
  const auto m = s.lower.rows();
  const auto coef = block_coefficients(data, s.label_probs);
  double nll = 0.5 * data.adjacency().sum();
  double kl = 0.0;
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index h = k; h < m; ++h) {
      const double a = s.lower(k, h), b = s.upper(k, h);
      nll += coef.pair_mass(k, h) * second_moment(a, b) -
             2.0 * coef.edge_mass(k, h) * mean_of(a, b);
      kl += kl_uniform_intervals(Eigen::VectorXd::Constant(1, a), Eigen::VectorXd::Constant(1, b),
                                 0.0, 1.0);
    }
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  for (int i = 0; i < data.nodes(); ++i)
    kl += kl_categorical(s.label_probs.row(i).transpose(), uniform);
  if (!std::isfinite(nll) || !std::isfinite(kl))
    throw NumericalBreakdown("non-finite sbm objective", 0);
  return ElboBreakdown::make(nll, kl);
}

SbmFit sbm_refine(const SbmData &data, SbmVariationalState state, const SbmFitConfig &config) {
  check_state(data, state);
  SbmFit fit;
  double prev = sbm_objective(data, state).total;
  fit.trace.push_back(prev);
  for (int it = 1; it <= config.max_iters; ++it) {
    update_intervals(data, state, config);
    update_labels(data, state);
    const double cur = sbm_objective(data, state).total;
    if (!std::isfinite(cur))
      throw NumericalBreakdown("non-finite sbm objective", it);
    fit.trace.push_back(cur);
    fit.iterations = it;
    if (std::abs(prev - cur) <= config.tol * std::max(1.0, std::abs(cur))) {
      fit.converged = true;
      break;
    }
    prev = cur;
  }
  fit.state = std::move(state);
  fit.elbo = sbm_objective(data, fit.state);
  return fit;
}

SbmVariationalState sort_communities(SbmVariationalState s) {
  const auto m = s.label_probs.cols();
  const Eigen::VectorXd size = s.label_probs.colwise().sum().transpose();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return size(x) > size(y); });
  SbmVariationalState out = s;
  for (Eigen::Index k = 0; k < m; ++k) {
    out.label_probs.col(k) = s.label_probs.col(order[static_cast<std::size_t>(k)]);
    for (Eigen::Index h = 0; h < m; ++h) {
      out.lower(k, h) = s.lower(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(h)]);
      out.upper(k, h) = s.upper(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(h)]);
    }
  }
  return out;
}

namespace {

constexpr double kInitSmoothing = 0.1;

/// Lloyd iterations on the rows of the top-m adjacency eigenvectors,
/// seeded k-means++ style.
std::vector<int> spectral_labels(const SbmData &data, int m, Rng &rng) {
  const int n = data.nodes();
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  if (m == 1)
    return labels;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(data.adjacency());
  const Eigen::MatrixXd emb = eig.eigenvectors().rightCols(m);
  Eigen::MatrixXd centers(m, m);
  std::uniform_int_distribution<int> first(0, n - 1);
  centers.row(0) = emb.row(first(rng));
  Eigen::VectorXd d2(n);
  for (int c = 1; c < m; ++c) {
    for (int i = 0; i < n; ++i)
      d2(i) = (centers.topRows(c).rowwise() - emb.row(i)).rowwise().squaredNorm().minCoeff();
    const double total = d2.sum();
    int chosen = first(rng);
    if (total > 0.0) {
      double u = uniform01(rng) * total;
      for (int i = 0; i < n; ++i) {
        u -= d2(i);
        if (u <= 0.0) {
          chosen = i;
          break;
        }
      }
    }
    centers.row(c) = emb.row(chosen);
  }
  for (int it = 0; it < 100; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      Eigen::Index k = 0;
      (centers.rowwise() - emb.row(i)).rowwise().squaredNorm().minCoeff(&k);
      if (labels[static_cast<std::size_t>(i)] != static_cast<int>(k)) {
        labels[static_cast<std::size_t>(i)] = static_cast<int>(k);
        changed = true;
      }
    }
    for (int c = 0; c < m; ++c) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(m);
      int count = 0;
      for (int i = 0; i < n; ++i)
        if (labels[static_cast<std::size_t>(i)] == c) {
          sum += emb.row(i);
          ++count;
        }
      if (count > 0)
        centers.row(c) = sum / count;
    }
    if (!changed && it > 0)
      break;
  }
  return labels;
}

} // namespace

SbmFit sbm_fit(const SbmData &data, const SbmModelSpec &spec, const SbmFitConfig &config) {
  const int m = spec.communities;
  if (m < 1)
    throw ConfigError("community count must be at least 1");
  if (config.restarts < 1 || config.max_iters < 1)
    throw ConfigError("sbm fit needs at least one restart and one iteration");
  const int n = data.nodes();
  SbmFit best;
  bool have = false;
  for (int r = 0; r < config.restarts; ++r) {
    Rng rng = make_rng(config.seed, {stable_hash(spec.id()), static_cast<std::uint64_t>(r)});
    std::vector<int> labels;
    if (r == 0) {
      labels = spectral_labels(data, m, rng);
    } else {
      std::uniform_int_distribution<int> pick(0, m - 1);
      for (int i = 0; i < n; ++i)
        labels.push_back(pick(rng));
    }
    SbmVariationalState init;
    init.lower = Eigen::MatrixXd::Constant(m, m, 0.25);
    init.upper = Eigen::MatrixXd::Constant(m, m, 0.75);
    init.label_probs = Eigen::MatrixXd::Constant(n, m, kInitSmoothing / m);
    for (int i = 0; i < n; ++i)
      init.label_probs(i, labels[static_cast<std::size_t>(i)]) += 1.0 - kInitSmoothing;
    SbmFit fit = sbm_refine(data, std::move(init), config);
    if (!have || fit.elbo.total < best.elbo.total) {
      best = std::move(fit);
      have = true;
    }
  }
  best.state = sort_communities(std::move(best.state));
  return best;
}

std::vector<int> map_labels(const SbmVariationalState &state) {
  std::vector<int> out(static_cast<std::size_t>(state.label_probs.rows()));
  for (Eigen::Index i = 0; i < state.label_probs.rows(); ++i) {
    Eigen::Index k = 0;
    state.label_probs.row(i).maxCoeff(&k);
    out[static_cast<std::size_t>(i)] = static_cast<int>(k);
  }
  return out;
}

double label_accuracy(const std::vector<int> &truth, const std::vector<int> &estimate) {
  if (truth.size() != estimate.size() || truth.empty())
    throw ShapeError("label vectors must be nonempty and of equal length");
  const int k = 1 + std::max(*std::max_element(truth.begin(), truth.end()),
                             *std::max_element(estimate.begin(), estimate.end()));
  if (k > 9)
    throw ConfigError("label accuracy supports at most 9 communities");
  if (*std::min_element(truth.begin(), truth.end()) < 0 ||
      *std::min_element(estimate.begin(), estimate.end()) < 0)
    throw ShapeError("labels must be nonnegative");
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(k, k);
  for (std::size_t i = 0; i < truth.size(); ++i)
    ++counts(estimate[i], truth[i]);
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  int best = 0;
  do {
    int agree = 0;
    for (int e = 0; e < k; ++e)
      agree += counts(e, perm[static_cast<std::size_t>(e)]);
    best = std::max(best, agree);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(truth.size());
}

PlantedGraph planted_partition(int n, int blocks, double p_in, double p_out, Rng &rng) {
  if (n < 2 || blocks < 1 || blocks > n)
    throw ConfigError("planted partition needs n ≥ 2 and 1 ≤ blocks ≤ n");
  if (!(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0))
    throw ConfigError("edge probabilities must lie in [0,1]");
  PlantedGraph g;
  g.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    g.labels[static_cast<std::size_t>(i)] = static_cast<int>(static_cast<long>(i) * blocks / n);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      const double p = g.labels[static_cast<std::size_t>(i)] == g.labels[static_cast<std::size_t>(j)]
                           ? p_in
                           : p_out;
      y(i, j) = uniform01(rng) < p ? 1.0 : 0.0;
    }
  g.data = SbmData(y);
  return g;
}

namespace {

void check_edge_means(const Eigen::VectorXd &o0, const Eigen::VectorXd &o1) {
  if (o0.size() != o1.size())
    throw ShapeError("edge-mean vectors differ in length");
  for (Eigen::Index e = 0; e < o0.size(); ++e)
    if (!(o0(e) >= 0.0 && o0(e) <= 1.0 && o1(e) >= 0.0 && o1(e) <= 1.0))
      throw ShapeError("edge means must lie in [0,1]");
}

} // namespace

BoundCheck sbm_learning_inequality_check(const Eigen::VectorXd &omega0,
                                         const Eigen::VectorXd &omega1) {
  check_edge_means(omega0, omega1);
  double log_lhs = 0.0, sq = 0.0;
  for (Eigen::Index e = 0; e < omega0.size(); ++e) {
    const double p = omega0(e), w = omega1(e);
    const double at0 = std::exp(-w * w + p * p);
    const double at1 = std::exp(-(1.0 - w) * (1.0 - w) + (1.0 - p) * (1.0 - p));
    log_lhs += std::log((1.0 - p) * at0 + p * at1);
    sq += (p - w) * (p - w);
  }
  BoundCheck out;
  out.lhs = std::exp(log_lhs);
  out.rhs = std::exp(-0.5 * sq);
  out.holds = out.lhs <= out.rhs * (1.0 + 1e-12);
  return out;
}

BoundCheck sbm_moment_bound_check(const Eigen::VectorXd &omega0, const Eigen::VectorXd &omega1,
                                  double rho) {
  check_edge_means(omega0, omega1);
  if (!(rho > 0.0))
    throw ConfigError("moment order must be positive");
  double log_lhs = 0.0, sq = 0.0;
  for (Eigen::Index e = 0; e < omega0.size(); ++e) {
    const double p = omega0(e), w = omega1(e);
    const double at0 = std::exp(rho * (-p * p + w * w));
    const double at1 = std::exp(rho * (-(1.0 - p) * (1.0 - p) + (1.0 - w) * (1.0 - w)));
    log_lhs += std::log((1.0 - p) * at0 + p * at1);
    sq += (p - w) * (p - w);
  }
  BoundCheck out;
  out.lhs = std::exp(log_lhs);
  out.rhs = std::exp(0.5 * rho * (rho + 2.0) * sq);
  out.holds = out.lhs <= out.rhs * (1.0 + 1e-12);
  return out;
}

} // namespace avb::quasi
