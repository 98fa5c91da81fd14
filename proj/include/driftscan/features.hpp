#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "driftscan/scene.hpp"

namespace driftscan {

inline constexpr std::size_t kFeatureCount = 26;

/// Fixed-order pixel features:
///   [0, 11)  reflectance B1 B2 B3 B4 B5 B6 B7 B8 B8A B11 B12
///   [11, 19) NDVI FAI FDI SI NDWI NRD NDMI BSI
///   [19, 26) GLCM contrast dissimilarity homogeneity energy correlation
///            mean variance
using FeatureVector = std::array<double, kFeatureCount>;

const std::array<std::string_view, kFeatureCount>& feature_names();

/// Bands read by the feature pipeline (everything except B9).
inline constexpr std::array<BandId, 11> kFeatureBands = {
    BandId::B1, BandId::B2, BandId::B3, BandId::B4, BandId::B5, BandId::B6,
    BandId::B7, BandId::B8, BandId::B8A, BandId::B11, BandId::B12,
};

inline constexpr int kGlcmLevels = 16;
inline constexpr int kTextureWindow = 5;

/// NDVI in [-1, 1] mapped to 16 gray levels.
int quantize_ndvi(double ndvi);

/// Texture statistics of a symmetric, normalized co-occurrence matrix.
struct GlcmStats {
  double contrast = 0.0;
  double dissimilarity = 0.0;
  double homogeneity = 1.0;
  double energy = 1.0;
  double correlation = 1.0;
  double mean = 0.0;
  double variance = 0.0;
};

/// GLCM statistics of a 2-D block of gray levels (row-major, `width` wide)
/// for offsets (0,1) and (1,0), averaged over the offsets that have pairs.
/// Correlation is 1 when the variance vanishes.
GlcmStats glcm_stats(const int* levels, int width, int height);

/// The 26 features of pixel (x, y). The 5x5 texture window is shifted to
/// stay inside the scene.
FeatureVector extract_features(const Scene& scene, int x, int y);

/// Features of every pixel in `region`, row-major; identical to calling
/// extract_features per pixel.
std::vector<FeatureVector> extract_features(const Scene& scene, const Rect& region);

}  // namespace driftscan
