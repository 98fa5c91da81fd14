#include "driftscan/random_walker.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace driftscan {
namespace {

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

// Unlabeled block of the lattice Laplacian stored as a 4-point stencil.
struct Stencil {
  std::vector<double> diag;
  std::vector<int> nbr;     // 4 per row, -1 when the neighbor is not an unknown
  std::vector<double> w;    // 4 per row
  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    const std::size_t n = diag.size();
    for (std::size_t i = 0; i < n; ++i) {
      double s = diag[i] * x[i];
      for (int k = 0; k < 4; ++k) {
        const int j = nbr[4 * i + k];
        if (j >= 0) s -= w[4 * i + k] * x[static_cast<std::size_t>(j)];
      }
      y[i] = s;
    }
  }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

WalkerResult random_walker(const IndexRaster& guidance, const MarkerMap& markers,
                           double beta, const WalkerOptions& options) {
  const int width = guidance.width();
  const int height = guidance.height();
  if (!markers.same_extent(width, height))
    throw InvalidArgument("marker map extent differs from guidance");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be positive");

  bool has_debris = false;
  bool has_other = false;
  for (Marker m : markers.values()) {
    has_debris |= m == Marker::kDebris;
    has_other |= m == Marker::kOther;
  }
  if (!has_debris || !has_other)
    throw InvalidArgument("random walker needs markers of both classes");

  double gmin = std::numeric_limits<double>::infinity();
  double gmax = -gmin;
  for (double v : guidance.values.values()) {
    if (!std::isfinite(v)) throw InvalidArgument("guidance must be finite");
    gmin = std::min(gmin, v);
    gmax = std::max(gmax, v);
  }
  const double range = gmax - gmin;
  auto g = [&](std::size_t i) {
    return range > 0.0 ? (guidance.values[i] - gmin) / range : 0.0;
  };

  WalkerResult result;
  result.probability = Grid<double>(width, height, 0.0);

  // Number the unknowns.
  std::vector<int> unknown(markers.size(), -1);
  std::vector<std::size_t> pixel_of;
  for (std::size_t i = 0; i < markers.size(); ++i) {
    if (markers[i] == Marker::kUnlabeled) {
      unknown[i] = static_cast<int>(pixel_of.size());
      pixel_of.push_back(i);
    } else if (markers[i] == Marker::kDebris) {
      result.probability[i] = 1.0;
    }
  }
  const std::size_t n = pixel_of.size();
  if (n == 0) return result;

  Stencil a;
  a.diag.assign(n, 0.0);
  a.nbr.assign(4 * n, -1);
  a.w.assign(4 * n, 0.0);
  std::vector<double> b(n, 0.0);
  std::vector<char> anchored(n, 0);
  for (std::size_t u = 0; u < n; ++u) {
    const std::size_t p = pixel_of[u];
    const int x = static_cast<int>(p % width);
    const int y = static_cast<int>(p / width);
    for (int k = 0; k < 4; ++k) {
      const int nx = x + kDx[k];
      const int ny = y + kDy[k];
      if (!markers.inside(nx, ny)) continue;
      const std::size_t q = markers.index(nx, ny);
      const double d = g(p) - g(q);
      const double w = std::exp(-beta * d * d);
      a.diag[u] += w;
      if (markers[q] == Marker::kUnlabeled) {
        a.nbr[4 * u + k] = unknown[q];
        a.w[4 * u + k] = w;
      } else {
        anchored[u] = 1;
        if (markers[q] == Marker::kDebris) b[u] += w;
      }
    }
  }

  // Flood anchoring through unknown-unknown edges; components never reached
  // touch no marker and make the block singular.
  {
    std::vector<int> stack;
    for (std::size_t u = 0; u < n; ++u)
      if (anchored[u]) stack.push_back(static_cast<int>(u));
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int k = 0; k < 4; ++k) {
        const int v = a.nbr[4 * static_cast<std::size_t>(u) + k];
        if (v >= 0 && !anchored[static_cast<std::size_t>(v)]) {
          anchored[static_cast<std::size_t>(v)] = 1;
          stack.push_back(v);
        }
      }
    }
    std::vector<char> seen(n, 0);
    for (std::size_t u = 0; u < n; ++u) {
      if (anchored[u] || seen[u]) continue;
      ++result.undetermined_components;
      std::vector<int> comp{static_cast<int>(u)};
      seen[u] = 1;
      while (!comp.empty()) {
        const int c = comp.back();
        comp.pop_back();
        for (int k = 0; k < 4; ++k) {
          const int v = a.nbr[4 * static_cast<std::size_t>(c) + k];
          if (v >= 0 && !seen[static_cast<std::size_t>(v)]) {
            seen[static_cast<std::size_t>(v)] = 1;
            comp.push_back(v);
          }
        }
      }
    }
  }

  // Decouple undetermined unknowns: pin them to 0.5 via an identity row.
  std::vector<double> x(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    if (anchored[u]) continue;
    a.diag[u] = 1.0;
    for (int k = 0; k < 4; ++k) a.nbr[4 * u + k] = -1;
    b[u] = 0.5;
    x[u] = 0.5;
  }

  // Jacobi-preconditioned conjugate gradients.
  std::vector<double> r(n), z(n), p(n), ap(n);
  a.apply(x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  // Residual measured per pixel in probability units: max |r_i| / L_ii.
  const auto scaled_residual = [&] {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(r[i]) / a.diag[i]);
    return m;
  };
  const double stop = options.tolerance;
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / a.diag[i];
  p = z;
  double rz = dot(r, z);
  const auto max_iter =
      static_cast<int>(std::ceil(options.max_iteration_factor * static_cast<double>(n)));
  double rnorm = scaled_residual();
  int iter = 0;
  while (rnorm > stop) {
    if (iter >= max_iter)
      throw SolverError("random walker CG did not converge in " +
                        std::to_string(max_iter) + " iterations (residual " +
                        std::to_string(rnorm) + ")");
    a.apply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;  // exact solution already reached
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    rnorm = scaled_residual();
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / a.diag[i];
    const double rz_next = dot(r, z);
    const double beta_cg = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta_cg * p[i];
    ++iter;
  }
  result.iterations = iter;
  result.residual = rnorm;

  for (std::size_t u = 0; u < n; ++u)
    result.probability[pixel_of[u]] = std::clamp(x[u], 0.0, 1.0);
  return result;
}

}  // namespace driftscan
