#pragma once

// Deterministic synthetic 12-band scenes for tests.

#include <cstdint>
#include <vector>

#include "driftscan/annotations.hpp"
#include "driftscan/scene.hpp"

namespace synth {

/// UTM-like 10 m grid used by every synthetic scene.
driftscan::GeoTransform utm_transform();

/// All 12 bands filled with `value`.
driftscan::Scene constant_scene(int width, int height, float value);
/// Independent uniform reflectances in [0, 0.3).
driftscan::Scene random_scene(int width, int height, std::uint64_t seed);

enum class Split { kTrain, kVal, kTest };

struct DebrisScene {
  driftscan::Scene scene;
  /// Drawn centerlines, one segment each.
  std::vector<driftscan::Polyline> lines;
  std::vector<Split> line_split;
  std::vector<driftscan::Pixel> ships;  // ship centers
  std::vector<Split> ship_split;
  /// Implanted debris pixels (lines widened to 3 px).
  driftscan::Mask truth;
  /// Ship pixels.
  driftscan::Mask ship_mask;

  driftscan::LineAnnotationSet annotations(Split split) const;
  std::vector<driftscan::Pixel> ship_centers(Split split) const;
  /// Debris points along the split's centerlines plus other points on ships
  /// and on open water away from anything implanted.
  driftscan::PointAnnotationSet points(Split split, std::uint64_t seed) const;
};

/// Water with debris lines and bright ship blobs on a 64 px cell layout. The
/// top half of the cells is the train split, then val, then test.
DebrisScene debris_scene(int width, int height, std::uint64_t seed);

}  // namespace synth
