#include "driftscan/scene.hpp"

#include <cctype>
#include <cmath>
#include <cstring>

namespace driftscan {

const char* to_string(LoadErrorKind kind) {
  switch (kind) {
    case LoadErrorKind::kIo: return "io error";
    case LoadErrorKind::kBadFormat: return "bad format";
    case LoadErrorKind::kBadLength: return "bad length";
    case LoadErrorKind::kUnsupported: return "unsupported";
    case LoadErrorKind::kMissingBand: return "missing band";
    case LoadErrorKind::kInconsistentDimensions: return "inconsistent dimensions";
    case LoadErrorKind::kNanPayload: return "nan payload";
    case LoadErrorKind::kBadGeoreference: return "unreadable georeferencing";
  }
  return "load error";
}

std::optional<BandId> parse_band(std::string_view name) {
  std::string norm;
  for (char ch : name) norm.push_back(static_cast<char>(std::toupper(ch)));
  // "B08" -> "B8", "B8A" stays.
  if (norm.size() >= 3 && norm[0] == 'B' && norm[1] == '0') norm.erase(1, 1);
  for (const auto& info : kBandRegistry)
    if (info.name == norm) return info.id;
  return std::nullopt;
}

const char* to_string(ProcessingLevel level) {
  return level == ProcessingLevel::L1C ? "L1C" : "L2A";
}

ProcessingLevel parse_processing_level(std::string_view text) {
  if (text == "L1C" || text == "l1c") return ProcessingLevel::L1C;
  if (text == "L2A" || text == "l2a") return ProcessingLevel::L2A;
  throw InvalidArgument("unknown processing level: " + std::string(text));
}

std::array<double, 2> GeoTransform::to_pixel(double map_x, double map_y) const {
  const double det = c[1] * c[5] - c[2] * c[4];
  if (det == 0.0 || !std::isfinite(det))
    throw InvalidArgument("geotransform is not invertible");
  const double dx = map_x - c[0];
  const double dy = map_y - c[3];
  return {(c[5] * dx - c[2] * dy) / det, (-c[4] * dx + c[1] * dy) / det};
}

Scene::Scene(int width, int height, std::vector<BandId> bands,
             std::vector<float> planes, GeoTransform geotransform,
             std::string crs, ProcessingLevel level)
    : width_(width),
      height_(height),
      bands_(std::move(bands)),
      geotransform_(geotransform),
      crs_(std::move(crs)),
      level_(level) {
  if (width <= 0 || height <= 0)
    throw InvalidArgument("scene extent must be positive");
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    auto& slot = slot_[index_of(bands_[i])];
    if (slot >= 0)
      throw InvalidArgument("duplicate band " +
                            std::string(band_name(bands_[i])));
    slot = static_cast<int>(i);
  }
  if (planes.size() != pixel_count() * bands_.size())
    throw InvalidArgument("scene data size does not match extent and bands");
  for (float v : planes)
    if (std::isnan(v)) throw InvalidArgument("scene contains NaN reflectance");
  data_ = std::make_shared<const std::vector<float>>(std::move(planes));
}

std::span<const float> Scene::plane_at(std::size_t slot) const {
  if (slot >= bands_.size()) throw InvalidArgument("band slot out of range");
  return data().subspan(slot * pixel_count(), pixel_count());
}

std::span<const float> Scene::plane(BandId id) const {
  const int slot = slot_[index_of(id)];
  if (slot < 0)
    throw InvalidArgument("scene lacks band " + std::string(band_name(id)));
  return plane_at(static_cast<std::size_t>(slot));
}

void Scene::require_bands(std::initializer_list<BandId> ids) const {
  for (BandId id : ids)
    if (!has_band(id))
      throw InvalidArgument("missing band " + std::string(band_name(id)));
}

Scene Scene::crop(const Rect& r) const {
  if (r.x < 0 || r.y < 0 || r.width <= 0 || r.height <= 0 ||
      r.x + r.width > width_ || r.y + r.height > height_)
    throw InvalidArgument("crop rectangle outside scene");
  std::vector<float> out(r.area() * bands_.size());
  auto dst = out.begin();
  for (std::size_t b = 0; b < bands_.size(); ++b) {
    const auto src = plane_at(b);
    for (int y = 0; y < r.height; ++y) {
      const auto row =
          src.begin() + static_cast<std::ptrdiff_t>(r.y + y) * width_ + r.x;
      dst = std::copy(row, row + r.width, dst);
    }
  }
  GeoTransform gt = geotransform_;
  const auto shifted = gt.to_map(r.x, r.y);
  gt.c[0] = shifted[0];
  gt.c[3] = shifted[1];
  return Scene(r.width, r.height, bands_, std::move(out), gt, crs_, level_);
}

bool operator==(const Scene& a, const Scene& b) {
  if (a.width_ != b.width_ || a.height_ != b.height_ || a.bands_ != b.bands_ ||
      a.geotransform_ != b.geotransform_ || a.crs_ != b.crs_ ||
      a.level_ != b.level_)
    return false;
  const auto da = a.data();
  const auto db = b.data();
  // Bitwise comparison so that -0.0 and 0.0 are distinguished.
  return da.size() == db.size() &&
         (da.empty() || std::memcmp(da.data(), db.data(),
                                    da.size() * sizeof(float)) == 0);
}

int clamped_origin(int center, int size, int extent) {
  const int origin = center - size / 2;
  return std::clamp(origin, 0, extent - size);
}

Patch window(const Scene& scene, Pixel center, int size) {
  if (size < 1) throw InvalidArgument("window size must be >= 1");
  if (size > scene.width() || size > scene.height())
    throw InvalidArgument("window size " + std::to_string(size) +
                          " exceeds scene extent");
  return Patch{scene,
               {clamped_origin(center.x, size, scene.width()),
                clamped_origin(center.y, size, scene.height())},
               size};
}

}  // namespace driftscan
