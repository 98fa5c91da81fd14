#include "driftscan/probability_map.hpp"

#include <cmath>

#include "driftscan/geotiff.hpp"

namespace driftscan {
namespace {

bool is_tiff(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".tif" || ext == ".tiff" || ext == ".TIF" || ext == ".TIFF";
}

}  // namespace

void ProbabilityMap::validate() const {
  for (float v : values.values())
    if (!(v >= 0.0f && v <= 1.0f))
      throw ContractViolation("probability outside [0, 1] in map from '" + scorer_id + "'");
}

RasterStack to_stack(const ProbabilityMap& map) {
  RasterStack s;
  s.width = map.width();
  s.height = map.height();
  s.names = {"PROBABILITY"};
  const auto v = map.values.values();
  s.planes.emplace_back(v.begin(), v.end());
  s.geotransform = map.geotransform;
  s.crs = map.crs;
  return s;
}

ProbabilityMap probability_from_stack(const RasterStack& stack, std::string scorer_id) {
  if (stack.planes.size() != 1)
    throw LoadError(LoadErrorKind::kInconsistentDimensions,
                    "probability raster must have exactly one band");
  ProbabilityMap map;
  map.values = Grid<float>(stack.width, stack.height, stack.planes.front());
  map.scorer_id = std::move(scorer_id);
  map.geotransform = stack.geotransform;
  map.crs = stack.crs;
  map.validate();
  return map;
}

ProbabilityMap load_probability_map(const std::filesystem::path& path) {
  if (!is_tiff(path)) return probability_from_stack(read_flat_stack(path), path.filename().string());
  TiffImage img = read_tiff(path);
  if (img.planes.size() != 1)
    throw LoadError(LoadErrorKind::kInconsistentDimensions,
                    "probability raster must have exactly one band");
  RasterStack s;
  s.width = img.width;
  s.height = img.height;
  s.names = {"PROBABILITY"};
  s.planes = std::move(img.planes);
  if (img.geotransform) s.geotransform = *img.geotransform;
  s.crs = img.crs;
  return probability_from_stack(s, path.filename().string());
}

void save_probability_map(const ProbabilityMap& map, const std::filesystem::path& path) {
  if (!is_tiff(path)) {
    write_flat_stack(to_stack(map), path);
    return;
  }
  TiffImage img;
  img.width = map.width();
  img.height = map.height();
  img.sample_type = TiffSampleType::kFloat32;
  const auto v = map.values.values();
  img.planes.emplace_back(v.begin(), v.end());
  img.geotransform = map.geotransform;
  img.crs = map.crs;
  write_tiff(img, path, {.deflate = true, .tiled = false, .rows_per_strip = 64});
}

}  // namespace driftscan
