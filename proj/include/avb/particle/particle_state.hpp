#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace avb::particle {

using AtomIndex = std::uint64_t;

/// Dirac mixture Σ_q ω_q δ(ψ_q) over atoms of a discretized space.
struct ParticleState {
  std::vector<AtomIndex> centers;  // distinct atom indices
  Eigen::MatrixXd coordinates;     // p × Q, column q is atom centers[q]
  Eigen::VectorXd weights;         // ω, sums to one
  std::uint64_t atom_count = 0;    // N of the space the centers live in

  [[nodiscard]] std::size_t particle_count() const noexcept { return centers.size(); }
};

} // namespace avb::particle
