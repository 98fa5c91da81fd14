#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "driftscan/scene.hpp"

namespace driftscan {

/// Named float32 planes sharing one extent; the payload of a DSCN file.
///
/// DSCN layout, all integers and floats little-endian:
///
///   "DSCN"                     4 bytes magic
///   width, height, band_count  3 x u32
///   band_count x name          u16 byte length + UTF-8 bytes
///   geotransform               6 x f64
///   crs                        u16 byte length + UTF-8 bytes
///   processing level           u8 (0 = L1C, 1 = L2A)
///   planes                     band_count x height x width f32, row-major
struct RasterStack {
  int width = 0;
  int height = 0;
  std::vector<std::string> names;
  std::vector<std::vector<float>> planes;
  GeoTransform geotransform;
  std::string crs;
  ProcessingLevel level = ProcessingLevel::L2A;

  friend bool operator==(const RasterStack&, const RasterStack&) = default;
};

/// Bytes preceding the first plane for a stack with these names and crs.
std::size_t flat_header_size(const std::vector<std::string>& names,
                             const std::string& crs);

void write_flat_stack(const RasterStack& stack,
                      const std::filesystem::path& path);
RasterStack read_flat_stack(const std::filesystem::path& path);

RasterStack to_stack(const Scene& scene);
/// Every plane name must be a recognized band.
Scene to_scene(const RasterStack& stack);

void write_flat(const Scene& scene, const std::filesystem::path& path);
Scene read_flat(const std::filesystem::path& path);

}  // namespace driftscan
