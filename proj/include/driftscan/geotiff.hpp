#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "driftscan/scene.hpp"

namespace driftscan {

enum class TiffSampleType { kUInt8, kInt8, kUInt16, kInt16, kFloat32 };

/// Decoded TIFF raster. Samples are stored as float regardless of the
/// on-disk type; 8/16-bit integers convert exactly.
struct TiffImage {
  int width = 0;
  int height = 0;
  TiffSampleType sample_type = TiffSampleType::kFloat32;
  std::vector<std::vector<float>> planes;
  std::optional<GeoTransform> geotransform;
  std::string crs;
};

struct TiffWriteOptions {
  bool deflate = false;
  bool tiled = false;
  int tile_size = 16;       // multiple of 16 per the TIFF spec
  int rows_per_strip = 8;
  bool planar_separate = false;
  bool horizontal_predictor = false;  // integer types only
};

/// Decodes the first image of a baseline (Geo)TIFF: uncompressed or DEFLATE,
/// striped or tiled, chunky or planar, 8/16-bit integer or 32-bit float.
TiffImage read_tiff(const std::filesystem::path& path);

void write_tiff(const TiffImage& image, const std::filesystem::path& path,
                const TiffWriteOptions& options = {});

/// Loads a 12-band Sentinel-2 scene. Integer samples are digital numbers and
/// are divided by 10000; float samples pass through. Band order comes from a
/// sidecar `<path>.bands` (whitespace- or comma-separated band names, B10
/// entries skipped) when present, otherwise the canonical order of 12 bands
/// (or 13 with B10 at position 11, which is dropped).
Scene load_geotiff(const std::filesystem::path& path, ProcessingLevel level);

}  // namespace driftscan
