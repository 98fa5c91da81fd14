#pragma once

#include <cstdint>

#include "driftscan/grid.hpp"
#include "driftscan/spectral.hpp"

namespace driftscan {

enum class Marker : std::uint8_t { kUnlabeled = 0, kDebris = 1, kOther = 2 };
using MarkerMap = Grid<Marker>;

struct WalkerOptions {
  double tolerance = 1e-8;  // bound on max_i |r_i| / L_ii (probability units)
  double max_iteration_factor = 10.0;  // cap = factor * unknowns
};

struct WalkerResult {
  /// Debris probability per pixel; markers carry exactly 1 or 0.
  Grid<double> probability;
  int iterations = 0;
  double residual = 0.0;
  /// Unlabeled components that touch no marker; their pixels are set to 0.5.
  std::size_t undetermined_components = 0;
};

/// Two-label random walker on the 4-connected pixel lattice. Guidance is
/// min-max normalized to g in [0, 1]; edges weigh exp(-beta * (g_i - g_j)^2).
/// Debris probabilities of unlabeled pixels solve L_U x = -B m (Dirichlet
/// problem with debris markers at 1 and other markers at 0) by
/// Jacobi-preconditioned conjugate gradients.
///
/// Throws InvalidArgument if a marker class is missing or extents differ and
/// SolverError if CG does not reach the tolerance within the iteration cap.
WalkerResult random_walker(const IndexRaster& guidance, const MarkerMap& markers,
                           double beta, const WalkerOptions& options = {});

}  // namespace driftscan
