#include "driftscan/features.hpp"

#include <algorithm>
#include <cmath>

#include "driftscan/spectral.hpp"

namespace driftscan {
namespace {

// Index formulas; reflectances enter as double.
void spectral_features(const Scene& scene, std::size_t i, FeatureVector& f) {
  std::array<double, kFeatureBands.size()> b{};
  for (std::size_t k = 0; k < kFeatureBands.size(); ++k) {
    b[k] = scene.plane(kFeatureBands[k])[i];
    f[k] = b[k];
  }
  const double b2 = b[1], b3 = b[2], b4 = b[3], b6 = b[5], b8 = b[7], b11 = b[9];
  f[11] = spectral::ndvi(b8, b4);
  f[12] = spectral::fai(b8, b4, b11);
  f[13] = spectral::fdi(b8, b6, b11);
  f[14] = std::cbrt((1.0 - b2) * (1.0 - b3) * (1.0 - b4));      // SI
  f[15] = spectral::normalized_difference(b3, b8);              // NDWI
  f[16] = b8 - b4;                                              // NRD
  f[17] = spectral::normalized_difference(b8, b11);             // NDMI
  f[18] = spectral::normalized_difference(b11 + b4, b8 + b2);   // BSI
}

void texture_features(const GlcmStats& t, FeatureVector& f) {
  f[19] = t.contrast;
  f[20] = t.dissimilarity;
  f[21] = t.homogeneity;
  f[22] = t.energy;
  f[23] = t.correlation;
  f[24] = t.mean;
  f[25] = t.variance;
}

// Texture window bounds along one axis.
std::pair<int, int> window_span(int center, int extent) {
  if (extent <= kTextureWindow) return {0, extent};
  const int lo = std::clamp(center - kTextureWindow / 2, 0, extent - kTextureWindow);
  return {lo, lo + kTextureWindow};
}

int level_at(const Scene& scene, std::size_t i) {
  return quantize_ndvi(spectral::ndvi(scene.plane(BandId::B8)[i], scene.plane(BandId::B4)[i]));
}

}  // namespace

const std::array<std::string_view, kFeatureCount>& feature_names() {
  static constexpr std::array<std::string_view, kFeatureCount> names = {
      "B1", "B2", "B3", "B4", "B5", "B6", "B7", "B8", "B8A", "B11", "B12",
      "NDVI", "FAI", "FDI", "SI", "NDWI", "NRD", "NDMI", "BSI",
      "GLCM_CONTRAST", "GLCM_DISSIMILARITY", "GLCM_HOMOGENEITY", "GLCM_ENERGY",
      "GLCM_CORRELATION", "GLCM_MEAN", "GLCM_VARIANCE"};
  return names;
}

int quantize_ndvi(double ndvi) {
  const double t = (ndvi + 1.0) * 0.5 * kGlcmLevels;
  if (!(t > 0.0)) return 0;
  return std::min(kGlcmLevels - 1, static_cast<int>(t));
}

GlcmStats glcm_stats(const int* levels, int width, int height) {
  // Each unordered neighbor pair adds to both (a,b) and (b,a); statistics are
  // accumulated straight from the pair list.
  constexpr int kOffsets[2][2] = {{0, 1}, {1, 0}};  // (row, col)
  GlcmStats sum{0, 0, 0, 0, 0, 0, 0};
  int used = 0;
  for (const auto& off : kOffsets) {
    int pairs_a[2 * kTextureWindow * kTextureWindow];
    int pairs_b[2 * kTextureWindow * kTextureWindow];
    int n = 0;
    for (int y = 0; y + off[0] < height; ++y)
      for (int x = 0; x + off[1] < width; ++x) {
        pairs_a[n] = levels[y * width + x];
        pairs_b[n] = levels[(y + off[0]) * width + x + off[1]];
        ++n;
      }
    if (n == 0) continue;
    const double total = 2.0 * n;
    GlcmStats s{0, 0, 0, 0, 0, 0, 0};
    for (int k = 0; k < n; ++k) {
      const double d = pairs_a[k] - pairs_b[k];
      s.contrast += 2.0 * d * d;
      s.dissimilarity += 2.0 * std::abs(d);
      s.homogeneity += 2.0 / (1.0 + d * d);
      s.mean += pairs_a[k] + pairs_b[k];
    }
    s.contrast /= total;
    s.dissimilarity /= total;
    s.homogeneity /= total;
    s.mean /= total;
    double cov = 0.0;
    for (int k = 0; k < n; ++k) {
      const double da = pairs_a[k] - s.mean;
      const double db = pairs_b[k] - s.mean;
      s.variance += da * da + db * db;
      cov += 2.0 * da * db;
    }
    s.variance /= total;
    cov /= total;
    s.correlation = s.variance > 1e-15 ? cov / s.variance : 1.0;

    // Energy needs the aggregated matrix: count identical cells.
    int cells[4 * kTextureWindow * kTextureWindow];
    int m = 0;
    for (int k = 0; k < n; ++k) {
      cells[m++] = pairs_a[k] * kGlcmLevels + pairs_b[k];
      cells[m++] = pairs_b[k] * kGlcmLevels + pairs_a[k];
    }
    std::sort(cells, cells + m);
    double asm_sum = 0.0;
    for (int k = 0; k < m;) {
      int j = k;
      while (j < m && cells[j] == cells[k]) ++j;
      const double p = (j - k) / total;
      asm_sum += p * p;
      k = j;
    }
    s.energy = std::sqrt(asm_sum);

    sum.contrast += s.contrast;
    sum.dissimilarity += s.dissimilarity;
    sum.homogeneity += s.homogeneity;
    sum.energy += s.energy;
    sum.correlation += s.correlation;
    sum.mean += s.mean;
    sum.variance += s.variance;
    ++used;
  }
  if (used == 0) {
    GlcmStats flat;
    flat.mean = levels[0];
    return flat;
  }
  const double inv = 1.0 / used;
  return {sum.contrast * inv, sum.dissimilarity * inv, sum.homogeneity * inv,
          sum.energy * inv,   sum.correlation * inv,   sum.mean * inv,
          sum.variance * inv};
}

FeatureVector extract_features(const Scene& scene, int x, int y) {
  if (x < 0 || y < 0 || x >= scene.width() || y >= scene.height())
    throw InvalidArgument("feature pixel outside scene");
  for (BandId id : kFeatureBands)
    if (!scene.has_band(id))
      throw InvalidArgument("missing band " + std::string(band_name(id)));
  FeatureVector f{};
  spectral_features(scene, static_cast<std::size_t>(y) * scene.width() + x, f);

  const auto [x0, x1] = window_span(x, scene.width());
  const auto [y0, y1] = window_span(y, scene.height());
  int levels[kTextureWindow * kTextureWindow];
  const int w = x1 - x0;
  for (int yy = y0; yy < y1; ++yy)
    for (int xx = x0; xx < x1; ++xx)
      levels[(yy - y0) * w + (xx - x0)] =
          level_at(scene, static_cast<std::size_t>(yy) * scene.width() + xx);
  texture_features(glcm_stats(levels, w, y1 - y0), f);
  return f;
}

std::vector<FeatureVector> extract_features(const Scene& scene, const Rect& region) {
  if (region.x < 0 || region.y < 0 || region.width <= 0 || region.height <= 0 ||
      region.x + region.width > scene.width() || region.y + region.height > scene.height())
    throw InvalidArgument("feature region outside scene");
  for (BandId id : kFeatureBands)
    if (!scene.has_band(id))
      throw InvalidArgument("missing band " + std::string(band_name(id)));

  // Quantized NDVI over the region plus the texture margin.
  const int mx0 = std::max(0, region.x - kTextureWindow);
  const int my0 = std::max(0, region.y - kTextureWindow);
  const int mx1 = std::min(scene.width(), region.x + region.width + kTextureWindow);
  const int my1 = std::min(scene.height(), region.y + region.height + kTextureWindow);
  const int mw = mx1 - mx0;
  std::vector<int> quant(static_cast<std::size_t>(mw) * (my1 - my0));
  for (int y = my0; y < my1; ++y)
    for (int x = mx0; x < mx1; ++x)
      quant[static_cast<std::size_t>(y - my0) * mw + (x - mx0)] =
          level_at(scene, static_cast<std::size_t>(y) * scene.width() + x);

  std::vector<FeatureVector> out(region.area());
  int levels[kTextureWindow * kTextureWindow];
  for (int y = region.y; y < region.y + region.height; ++y) {
    const auto [y0, y1] = window_span(y, scene.height());
    for (int x = region.x; x < region.x + region.width; ++x) {
      const auto [x0, x1] = window_span(x, scene.width());
      FeatureVector& f =
          out[static_cast<std::size_t>(y - region.y) * region.width + (x - region.x)];
      spectral_features(scene, static_cast<std::size_t>(y) * scene.width() + x, f);
      const int w = x1 - x0;
      for (int yy = y0; yy < y1; ++yy)
        for (int xx = x0; xx < x1; ++xx)
          levels[(yy - y0) * w + (xx - x0)] =
              quant[static_cast<std::size_t>(yy - my0) * mw + (xx - mx0)];
      texture_features(glcm_stats(levels, w, y1 - y0), f);
    }
  }
  return out;
}

}  // namespace driftscan
