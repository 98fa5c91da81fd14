#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "driftscan/bands.hpp"
#include "driftscan/grid.hpp"

namespace driftscan {

enum class ProcessingLevel : unsigned char { L1C = 0, L2A = 1 };

const char* to_string(ProcessingLevel level);
ProcessingLevel parse_processing_level(std::string_view text);

/// GDAL-ordered affine transform:
///   map_x = c[0] + col * c[1] + row * c[2]
///   map_y = c[3] + col * c[4] + row * c[5]
struct GeoTransform {
  std::array<double, 6> c{0.0, 1.0, 0.0, 0.0, 0.0, 1.0};

  /// Map coordinates of the continuous pixel position (col, row).
  std::array<double, 2> to_map(double col, double row) const {
    return {c[0] + col * c[1] + row * c[2], c[3] + col * c[4] + row * c[5]};
  }
  /// Inverse of to_map; throws InvalidArgument for singular transforms.
  std::array<double, 2> to_pixel(double map_x, double map_y) const;

  friend bool operator==(const GeoTransform&, const GeoTransform&) = default;
};

/// Immutable multi-band reflectance raster. Copies share the pixel buffer.
class Scene {
 public:
  Scene() = default;
  /// `planes` holds one row-major width*height plane per entry in `bands`.
  Scene(int width, int height, std::vector<BandId> bands,
        std::vector<float> planes, GeoTransform geotransform = {},
        std::string crs = {}, ProcessingLevel level = ProcessingLevel::L2A);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }
  const std::vector<BandId>& bands() const noexcept { return bands_; }
  const GeoTransform& geotransform() const noexcept { return geotransform_; }
  const std::string& crs() const noexcept { return crs_; }
  ProcessingLevel level() const noexcept { return level_; }

  bool has_band(BandId id) const noexcept { return slot_[index_of(id)] >= 0; }
  /// Plane of band `id`; throws InvalidArgument when the band is absent.
  std::span<const float> plane(BandId id) const;
  std::span<const float> plane_at(std::size_t slot) const;
  float at(BandId id, int x, int y) const {
    return plane(id)[static_cast<std::size_t>(y) * width_ + x];
  }
  /// All planes, band-major.
  std::span<const float> data() const noexcept {
    return data_ ? std::span<const float>(*data_) : std::span<const float>();
  }

  /// Throws InvalidArgument unless every listed band is present.
  void require_bands(std::initializer_list<BandId> ids) const;

  /// Copy of the sub-rectangle with the geotransform shifted accordingly.
  Scene crop(const Rect& r) const;

  friend bool operator==(const Scene& a, const Scene& b);

 private:
  static constexpr std::size_t index_of(BandId id) {
    return static_cast<std::size_t>(id);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<BandId> bands_;
  std::array<int, kBandCount> slot_{-1, -1, -1, -1, -1, -1,
                                    -1, -1, -1, -1, -1, -1};
  std::shared_ptr<const std::vector<float>> data_;
  GeoTransform geotransform_;
  std::string crs_;
  ProcessingLevel level_ = ProcessingLevel::L2A;
};

/// Square window into a parent scene.
struct Patch {
  Scene parent;
  Pixel origin;
  int size = 0;

  Rect rect() const { return {origin.x, origin.y, size, size}; }
  Scene as_scene() const { return parent.crop(rect()); }
};

/// Square window of `size` centered at `center`. The origin is shifted so
/// the window stays inside the scene; size is preserved.
Patch window(const Scene& scene, Pixel center, int size);

/// Origin of a clamped window of `size` along an axis of `extent` pixels.
int clamped_origin(int center, int size, int extent);

}  // namespace driftscan
