#pragma once

#include "driftscan/bands.hpp"
#include "driftscan/grid.hpp"
#include "driftscan/scene.hpp"

namespace driftscan {

enum class IndexKind { kNdvi, kFdi };

struct IndexRaster {
  IndexKind kind = IndexKind::kNdvi;
  Grid<double> values;

  int width() const { return values.width(); }
  int height() const { return values.height(); }
};

namespace spectral {

/// (a - b) / (a + b), or 0 when the denominator vanishes.
inline double normalized_difference(double a, double b) {
  const double den = a + b;
  return den == 0.0 ? 0.0 : (a - b) / den;
}

inline double ndvi(double b8, double b4) { return normalized_difference(b8, b4); }

/// Red-to-SWIR baseline slope factor of the floating debris index, with the
/// empirical factor 10 applied.
inline constexpr double kFdiSlope =
    (wavelength_nm(BandId::B8) - wavelength_nm(BandId::B4)) /
    (wavelength_nm(BandId::B11) - wavelength_nm(BandId::B4)) * 10.0;

/// Floating debris index: NIR minus a red-edge/SWIR baseline.
inline double fdi(double b8, double b6, double b11) {
  return b8 - (b6 + (b11 - b6) * kFdiSlope);
}

/// Floating algae index: NIR minus a red/SWIR linear baseline.
inline double fai(double b8, double b4, double b11) {
  const double t = (wavelength_nm(BandId::B8) - wavelength_nm(BandId::B4)) /
                   (wavelength_nm(BandId::B11) - wavelength_nm(BandId::B4));
  return b8 - (b4 + (b11 - b4) * t);
}

}  // namespace spectral

/// Per-pixel (B8 - B4) / (B8 + B4); zero where B8 + B4 = 0.
IndexRaster ndvi(const Scene& scene);
/// Per-pixel floating debris index from B8, B6 and B11.
IndexRaster fdi(const Scene& scene);

}  // namespace driftscan
