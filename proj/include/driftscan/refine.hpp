#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "driftscan/annotations.hpp"
#include "driftscan/flat_io.hpp"
#include "driftscan/mask.hpp"
#include "driftscan/random_walker.hpp"
#include "driftscan/scene.hpp"
#include "driftscan/spectral.hpp"

namespace driftscan {

/// One configuration of the label refinement grid.
class RefinementParams {
 public:
  static constexpr int kBufferSizes[] = {0, 1, 2};
  static constexpr double kBetas[] = {1.0, 10.0};
  static constexpr double kDebrisDensities[] = {0.05, 0.25, 0.50, 0.75};
  static constexpr double kOtherDensity = 0.05;

  /// Values restricted to the refinement grid above.
  RefinementParams(int buffer_px, double beta, double debris_marker_density);

  /// Arbitrary values within their domains (buffer >= 0, beta > 0,
  /// densities in (0, 1]) for experiments outside the grid.
  static RefinementParams custom(int buffer_px, double beta, double debris_density,
                                 double other_density);

  /// The 24 grid configurations, buffer-major, then density, then beta.
  static std::vector<RefinementParams> grid();

  int buffer_px() const { return buffer_px_; }
  double beta() const { return beta_; }
  double debris_marker_density() const { return debris_density_; }
  double other_marker_density() const { return other_density_; }

 private:
  RefinementParams() = default;
  int buffer_px_ = 0;
  double beta_ = 1.0;
  double debris_density_ = 0.05;
  double other_density_ = kOtherDensity;
};

struct ConfigurationOutcome {
  RefinementParams params;
  bool degenerate = false;
  std::string note;
  int solver_iterations = 0;
};

struct RefinementResult {
  static constexpr std::size_t kMaskCount = 25;

  /// 24 walker masks in grid order followed by the rasterized original.
  std::vector<Mask> masks;
  /// Mean debris indicator over `masks`.
  FuzzyMask average;
  std::vector<ConfigurationOutcome> configurations;
  /// Set when every configuration degenerated and `masks` holds copies of
  /// the original annotation.
  bool degenerate = false;
  std::vector<std::string> warnings;

  /// Fraction of pixels on which all masks agree.
  double agreement() const;
};

/// Bresenham rasterization; line pixels are debris, the rest other.
Mask rasterize_lines(const LineAnnotationSet& lines, int width, int height);

/// Dilation of the debris set by a (2r+1) x (2r+1) square.
Mask buffer_mask(const Mask& mask, int radius_px);

/// Otsu threshold on a 256-bin histogram spanning [min, max]. Returns the
/// upper edge of the bin that maximizes between-class variance, lowest bin on
/// ties. Throws DegenerateHistogram when fewer than two distinct values.
double otsu_threshold(std::span<const double> values);

/// Debris where fdi exceeds the Otsu threshold of the FDI values inside the
/// buffered region, and the buffer itself is debris.
Mask preliminary_region(const IndexRaster& fdi, const Mask& buffered);

/// Independent Bernoulli marker draws; redrawn on a fresh substream until
/// both classes are present.
MarkerMap sample_markers(const Mask& preliminary, const RefinementParams& params,
                         std::uint64_t seed);

/// Full label refinement chain yielding the 25-mask ensemble.
RefinementResult refine_labels(const Scene& scene, const LineAnnotationSet& lines,
                               std::uint64_t seed);

/// 26-plane stack: M00..M24 crisp masks (0/1) then AVERAGE.
RasterStack refinement_to_stack(const RefinementResult& result, const Scene& scene);
RefinementResult refinement_from_stack(const RasterStack& stack);

}  // namespace driftscan
