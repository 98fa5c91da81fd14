#pragma once

#include <filesystem>
#include <vector>

#include "driftscan/annotations.hpp"
#include "driftscan/scene.hpp"

namespace driftscan {

enum class CoordinateSpace { kPixel, kMap };

CoordinateSpace parse_coordinate_space(std::string_view text);

/// Pixel index containing a coordinate given in `space`. Map coordinates go
/// through the inverse geotransform; both are floored.
Pixel to_pixel_index(double cx, double cy, CoordinateSpace space,
                     const GeoTransform& geotransform);

/// LineString and MultiLineString features of a FeatureCollection. Vertices
/// must fall inside the width x height extent.
LineAnnotationSet read_line_annotations(const std::filesystem::path& path,
                                        CoordinateSpace space,
                                        const GeoTransform& geotransform, int width,
                                        int height);

/// Point features; the label comes from the "label" (or "class") property,
/// "debris"/"marine_debris"/1 for debris and "other"/0 otherwise.
PointAnnotationSet read_point_annotations(const std::filesystem::path& path,
                                          CoordinateSpace space,
                                          const GeoTransform& geotransform, int width,
                                          int height);

/// Point features without labels, e.g. ship positions.
std::vector<Pixel> read_point_locations(const std::filesystem::path& path,
                                        CoordinateSpace space,
                                        const GeoTransform& geotransform, int width,
                                        int height);

}  // namespace driftscan
