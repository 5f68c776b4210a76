#pragma once

#include "avb/particle/particle_state.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

namespace avb::particle {

/// Finite atom set Θ• covering a bounded parameter space. Either a regular
/// grid (atoms addressed lazily by mixed-radix index) or an explicit list.
class DiscretizedSpace {
public:
  /// Grid over [−bound, bound]^dim with the given spacing. Per-coordinate
  /// levels are the multiples of spacing inside the bound, plus ±bound when
  /// the bound is not itself a multiple.
  static DiscretizedSpace grid(int dim, double bound, double spacing);

  /// Explicit atoms, one per column; atoms must be distinct.
  static DiscretizedSpace explicit_atoms(Eigen::MatrixXd atoms);

  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] std::uint64_t atom_count() const noexcept { return count_; }
  [[nodiscard]] bool is_grid() const noexcept { return !atoms_.has_value(); }
  [[nodiscard]] double spacing() const noexcept { return spacing_; }
  [[nodiscard]] double bound() const noexcept { return bound_; }
  [[nodiscard]] const std::vector<double> &levels() const noexcept { return levels_; }

  /// Coordinates of an atom.
  [[nodiscard]] Eigen::VectorXd atom(AtomIndex index) const;

  /// Nearest atom. Grid: per-coordinate rounding with midpoint ties toward
  /// +∞, then clamping. Explicit: Euclidean nearest, lowest index on ties.
  [[nodiscard]] AtomIndex project(const Eigen::Ref<const Eigen::VectorXd> &point) const;

  /// All atoms as columns; throws CapacityError above max_atoms.
  [[nodiscard]] Eigen::MatrixXd materialize(std::uint64_t max_atoms = 1u << 24) const;

private:
  int dim_ = 0;
  double spacing_ = 0.0;
  double bound_ = 0.0;
  std::vector<double> levels_;
  std::optional<Eigen::MatrixXd> atoms_;
  std::uint64_t count_ = 0;
};

/// Grid over the p coordinates of a bounded parameter vector.
[[nodiscard]] DiscretizedSpace build_grid(int dim, double bound, double target_spacing);

/// project_to_grid: nearest atom index.
[[nodiscard]] AtomIndex project_to_grid(const DiscretizedSpace &space,
                                        const Eigen::Ref<const Eigen::VectorXd> &point);

} // namespace avb::particle
