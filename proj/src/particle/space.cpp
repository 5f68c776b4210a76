#include "avb/particle/space.hpp"

#include "avb/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

namespace avb::particle {

DiscretizedSpace DiscretizedSpace::grid(int dim, double bound, double spacing) {
  if (dim < 1)
    throw ConfigError("grid dimension must be positive");
  if (!(spacing > 0.0) || !(bound > 0.0) || !std::isfinite(spacing) || !std::isfinite(bound))
    throw ConfigError("grid spacing and bound must be positive");
  DiscretizedSpace s;
  s.dim_ = dim;
  s.spacing_ = spacing;
  s.bound_ = bound;
  const double ratio = bound / spacing;
  const auto kmax = static_cast<long long>(std::floor(ratio + 1e-9));
  if (kmax > (1LL << 40))
    throw CapacityError("grid spacing too fine for the bound");
  for (long long k = -kmax; k <= kmax; ++k)
    s.levels_.push_back(static_cast<double>(k) * spacing);
  if (s.levels_.back() < bound - 1e-12 * bound) {
    s.levels_.insert(s.levels_.begin(), -bound);
    s.levels_.push_back(bound);
  } else {
    // absorb roundoff so extreme levels equal ±bound exactly
    s.levels_.front() = -bound;
    s.levels_.back() = bound;
  }
  const auto per_axis = static_cast<std::uint64_t>(s.levels_.size());
  std::uint64_t count = 1;
  for (int j = 0; j < dim; ++j) {
    if (count > std::numeric_limits<std::uint64_t>::max() / per_axis)
      throw CapacityError("atom count " + std::to_string(per_axis) + "^" +
                          std::to_string(dim) + " exceeds the addressable range");
    count *= per_axis;
  }
  s.count_ = count;
  return s;
}

DiscretizedSpace DiscretizedSpace::explicit_atoms(Eigen::MatrixXd atoms) {
  if (atoms.rows() < 1 || atoms.cols() < 1)
    throw ConfigError("explicit atom list is empty");
  if (!atoms.allFinite())
    throw ConfigError("explicit atoms must be finite");
  std::set<std::vector<double>> seen;
  for (Eigen::Index c = 0; c < atoms.cols(); ++c) {
    std::vector<double> key(atoms.col(c).data(), atoms.col(c).data() + atoms.rows());
    if (!seen.insert(std::move(key)).second)
      throw ConfigError("explicit atoms must be distinct");
  }
  DiscretizedSpace s;
  s.dim_ = static_cast<int>(atoms.rows());
  s.count_ = static_cast<std::uint64_t>(atoms.cols());
  s.atoms_ = std::move(atoms);
  return s;
}

Eigen::VectorXd DiscretizedSpace::atom(AtomIndex index) const {
  if (index >= count_)
    throw std::out_of_range("atom index out of range");
  if (atoms_)
    return atoms_->col(static_cast<Eigen::Index>(index));
  Eigen::VectorXd out(dim_);
  const auto per_axis = static_cast<std::uint64_t>(levels_.size());
  for (int j = 0; j < dim_; ++j) {
    out(j) = levels_[static_cast<std::size_t>(index % per_axis)];
    index /= per_axis;
  }
  return out;
}

AtomIndex DiscretizedSpace::project(const Eigen::Ref<const Eigen::VectorXd> &point) const {
  if (point.size() != dim_)
    throw ShapeError("point dimension differs from the space dimension");
  if (!point.allFinite())
    throw ShapeError("cannot project a non-finite point");
  if (atoms_) {
    const Eigen::VectorXd d2 = (atoms_->colwise() - point).colwise().squaredNorm();
    Eigen::Index best = 0;
    d2.minCoeff(&best); // first minimum
    return static_cast<AtomIndex>(best);
  }
  const auto per_axis = static_cast<std::uint64_t>(levels_.size());
  AtomIndex index = 0;
  AtomIndex stride = 1;
  for (int j = 0; j < dim_; ++j) {
    const double v = point(j);
    const auto hi = std::lower_bound(levels_.begin(), levels_.end(), v);
    std::size_t pick;
    if (hi == levels_.begin()) {
      pick = 0;
    } else if (hi == levels_.end()) {
      pick = levels_.size() - 1;
    } else {
      const auto up = static_cast<std::size_t>(hi - levels_.begin());
      // equal distance goes up
      pick = (*hi - v) <= (v - *(hi - 1)) ? up : up - 1;
    }
    index += static_cast<AtomIndex>(pick) * stride;
    stride *= per_axis;
  }
  return index;
}

Eigen::MatrixXd DiscretizedSpace::materialize(std::uint64_t max_atoms) const {
  if (count_ > max_atoms)
    throw CapacityError("refusing to materialize " + std::to_string(count_) + " atoms");
  if (atoms_)
    return *atoms_;
  Eigen::MatrixXd out(dim_, static_cast<Eigen::Index>(count_));
  for (std::uint64_t i = 0; i < count_; ++i)
    out.col(static_cast<Eigen::Index>(i)) = atom(i);
  return out;
}

DiscretizedSpace build_grid(int dim, double bound, double target_spacing) {
  return DiscretizedSpace::grid(dim, bound, target_spacing);
}

AtomIndex project_to_grid(const DiscretizedSpace &space,
                          const Eigen::Ref<const Eigen::VectorXd> &point) {
  return space.project(point);
}

} // namespace avb::particle
