#include "synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "driftscan/random.hpp"
#include "driftscan/refine.hpp"

namespace synth {

using namespace driftscan;

namespace {

// B1 B2 B3 B4 B5 B6 B7 B8 B8A B9 B11 B12
constexpr std::array<float, 12> kWater = {0.07f, 0.06f, 0.045f, 0.025f, 0.02f, 0.018f,
                                          0.017f, 0.015f, 0.013f, 0.008f, 0.004f, 0.002f};
constexpr std::array<float, 12> kDebrisDelta = {0.01f, 0.012f, 0.02f, 0.02f, 0.04f, 0.06f,
                                                0.075f, 0.085f, 0.08f, 0.04f, 0.03f, 0.015f};
constexpr std::array<float, 12> kShipDelta = {0.25f, 0.25f, 0.25f, 0.25f, 0.25f, 0.25f,
                                              0.25f, 0.25f, 0.25f, 0.22f, 0.2f, 0.2f};
constexpr float kNoise = 0.002f;
constexpr int kCell = 64;

Split split_of_row(int cell_row, int rows) {
  if (cell_row < rows / 2) return Split::kTrain;
  if (cell_row < rows * 3 / 4) return Split::kVal;
  return Split::kTest;
}

double segment_distance(double px, double py, Pixel a, Pixel b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (a.x + t * dx), py - (a.y + t * dy));
}

}  // namespace

GeoTransform utm_transform() { return GeoTransform{{500000.0, 10.0, 0.0, 4000000.0, 0.0, -10.0}}; }

Scene constant_scene(int width, int height, float value) {
  const std::vector<BandId> bands(kAllBands.begin(), kAllBands.end());
  return Scene(width, height, bands,
               std::vector<float>(bands.size() * width * height, value), utm_transform(),
               "EPSG:32630");
}

Scene random_scene(int width, int height, std::uint64_t seed) {
  const std::vector<BandId> bands(kAllBands.begin(), kAllBands.end());
  std::vector<float> planes(bands.size() * width * height);
  Rng rng(seed);
  for (auto& v : planes) v = static_cast<float>(0.3 * rng.uniform());
  return Scene(width, height, bands, std::move(planes), utm_transform(), "EPSG:32630");
}

DebrisScene debris_scene(int width, int height, std::uint64_t seed) {
  DebrisScene out;
  out.truth = Mask(width, height, Label::kOther);
  out.ship_mask = Mask(width, height, Label::kOther);
  Rng rng(seed);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<float> amplitude(n, 0.0f);  // debris fraction per pixel

  const int rows = height / kCell, cols = width / kCell;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int cx = c * kCell + kCell / 2 + static_cast<int>(rng.below(17)) - 8;
      const int cy = r * kCell + kCell / 2 + static_cast<int>(rng.below(17)) - 8;
      const int kind = (r + c) % 3;
      if (kind == 0) {
        const double angle = 3.141592653589793 * rng.uniform();
        const double half = 10.0 + 8.0 * rng.uniform();
        const Pixel a{static_cast<int>(std::lround(cx - half * std::cos(angle))),
                      static_cast<int>(std::lround(cy - half * std::sin(angle)))};
        const Pixel b{static_cast<int>(std::lround(cx + half * std::cos(angle))),
                      static_cast<int>(std::lround(cy + half * std::sin(angle)))};
        const float strength = static_cast<float>(0.7 + 0.3 * rng.uniform());
        for (int y = std::min(a.y, b.y) - 2; y <= std::max(a.y, b.y) + 2; ++y)
          for (int x = std::min(a.x, b.x) - 2; x <= std::max(a.x, b.x) + 2; ++x) {
            if (x < 0 || y < 0 || x >= width || y >= height) continue;
            if (segment_distance(x, y, a, b) <= 1.0) {
              out.truth(x, y) = Label::kDebris;
              amplitude[out.truth.index(x, y)] = strength;
            }
          }
        out.lines.push_back({a, b});
        out.line_split.push_back(split_of_row(r, rows));
      } else if (kind == 1) {
        for (int y = cy - 2; y < cy + 2; ++y)
          for (int x = cx - 2; x < cx + 2; ++x) out.ship_mask(x, y) = Label::kDebris;
        out.ships.push_back({cx, cy});
        out.ship_split.push_back(split_of_row(r, rows));
      }
    }

  const std::vector<BandId> bands(kAllBands.begin(), kAllBands.end());
  std::vector<float> planes(bands.size() * n);
  for (std::size_t b = 0; b < bands.size(); ++b)
    for (std::size_t i = 0; i < n; ++i) {
      float v = kWater[b] + kNoise * static_cast<float>(rng.normal());
      v += amplitude[i] * kDebrisDelta[b];
      if (out.ship_mask[i] == Label::kDebris) v += kShipDelta[b];
      planes[b * n + i] = std::max(0.0f, v);
    }
  out.scene = Scene(width, height, bands, std::move(planes), utm_transform(), "EPSG:32630");
  return out;
}

LineAnnotationSet DebrisScene::annotations(Split split) const {
  LineAnnotationSet set;
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (line_split[i] == split) set.lines.push_back(lines[i]);
  return set;
}

std::vector<Pixel> DebrisScene::ship_centers(Split split) const {
  std::vector<Pixel> out;
  for (std::size_t i = 0; i < ships.size(); ++i)
    if (ship_split[i] == split) out.push_back(ships[i]);
  return out;
}

PointAnnotationSet DebrisScene::points(Split split, std::uint64_t seed) const {
  PointAnnotationSet set;
  const int w = truth.width(), h = truth.height();
  const Mask center = rasterize_lines(annotations(split), w, h);
  int k = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (center(x, y) == Label::kDebris && truth(x, y) == Label::kDebris && k++ % 3 == 0)
        set.points.push_back({{x, y}, Label::kDebris});
  for (const Pixel& s : ship_centers(split)) set.points.push_back({s, Label::kOther});

  const int rows = h / kCell;
  int y_lo = h, y_hi = 0;
  for (int r = 0; r < rows; ++r)
    if (split_of_row(r, rows) == split) {
      y_lo = std::min(y_lo, r * kCell);
      y_hi = std::max(y_hi, (r + 1) * kCell);
    }
  Rng rng(seed);
  const std::size_t want_water = set.points.size();
  for (std::size_t added = 0, tries = 0; added < want_water && tries < 100000; ++tries) {
    const int x = static_cast<int>(rng.below(w));
    const int y = y_lo + static_cast<int>(rng.below(y_hi - y_lo));
    bool clear = true;
    for (int yy = std::max(0, y - 4); yy <= std::min(h - 1, y + 4) && clear; ++yy)
      for (int xx = std::max(0, x - 4); xx <= std::min(w - 1, x + 4); ++xx)
        if (truth(xx, yy) == Label::kDebris || ship_mask(xx, yy) == Label::kDebris) clear = false;
    if (!clear) continue;
    set.points.push_back({{x, y}, Label::kOther});
    ++added;
  }
  return set;
}

}  // namespace synth
