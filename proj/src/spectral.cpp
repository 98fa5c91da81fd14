#include "driftscan/spectral.hpp"

namespace driftscan {

IndexRaster ndvi(const Scene& scene) {
  scene.require_bands({BandId::B8, BandId::B4});
  const auto b8 = scene.plane(BandId::B8);
  const auto b4 = scene.plane(BandId::B4);
  IndexRaster out{IndexKind::kNdvi, Grid<double>(scene.width(), scene.height())};
  for (std::size_t i = 0; i < b8.size(); ++i) out.values[i] = spectral::ndvi(b8[i], b4[i]);
  return out;
}

IndexRaster fdi(const Scene& scene) {
  scene.require_bands({BandId::B8, BandId::B6, BandId::B11});
  const auto b8 = scene.plane(BandId::B8);
  const auto b6 = scene.plane(BandId::B6);
  const auto b11 = scene.plane(BandId::B11);
  IndexRaster out{IndexKind::kFdi, Grid<double>(scene.width(), scene.height())};
  for (std::size_t i = 0; i < b8.size(); ++i)
    out.values[i] = spectral::fdi(b8[i], b6[i], b11[i]);
  return out;
}

}  // namespace driftscan
