#pragma once

#include <optional>
#include <string>

#include "driftscan/flat_io.hpp"
#include "driftscan/grid.hpp"
#include "driftscan/scene.hpp"

namespace driftscan {

/// Per-pixel debris probability with its provenance.
struct ProbabilityMap {
  Grid<float> values;
  std::string scorer_id;
  std::optional<double> threshold;
  GeoTransform geotransform;
  std::string crs;

  int width() const { return values.width(); }
  int height() const { return values.height(); }

  /// Throws ContractViolation unless every value is finite and in [0, 1].
  void validate() const;
};

/// Single plane named "PROBABILITY"; provenance is not persisted.
RasterStack to_stack(const ProbabilityMap& map);
/// Accepts any single-plane stack.
ProbabilityMap probability_from_stack(const RasterStack& stack, std::string scorer_id);

/// Reads a DSCN file or a single-band GeoTIFF (by extension .tif/.tiff).
ProbabilityMap load_probability_map(const std::filesystem::path& path);
/// Writes DSCN, or float32 GeoTIFF for .tif/.tiff paths.
void save_probability_map(const ProbabilityMap& map, const std::filesystem::path& path);

}  // namespace driftscan
