#include <cmath>

#include "doctest.h"
#include "driftscan/random.hpp"
#include "driftscan/spectral.hpp"
#include "synthetic.hpp"

using namespace driftscan;

namespace {

// Scene where every band is 0 except the ones given.
Scene bands_scene(std::initializer_list<std::pair<BandId, float>> values) {
  std::vector<float> data(kBandCount, 0.0f);
  for (auto [id, v] : values) data[static_cast<std::size_t>(id)] = v;
  return Scene(1, 1, {kAllBands.begin(), kAllBands.end()}, data);
}

}  // namespace

TEST_CASE("NDVI examples") {
  CHECK(ndvi(bands_scene({{BandId::B8, 0.5f}, {BandId::B4, 0.25f}})).values[0] ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(ndvi(bands_scene({{BandId::B8, 0.3f}, {BandId::B4, 0.3f}})).values[0] == 0.0);
  CHECK(ndvi(bands_scene({{BandId::B8, 1.0f}, {BandId::B4, 0.0f}})).values[0] == 1.0);
  CHECK(ndvi(bands_scene({})).values[0] == 0.0);
  CHECK(ndvi(bands_scene({})).kind == IndexKind::kNdvi);
}

TEST_CASE("FDI hand evaluation with literal wavelengths") {
  // lambda: B4 664.6, B8 832.8, B11 1613.7 nm.
  const double slope = (832.8 - 664.6) / (1613.7 - 664.6) * 10.0;
  const double b6 = 0.1, b11 = 0.2, b8 = 0.3;
  const double expected = b8 - (b6 + (b11 - b6) * slope);
  CHECK(expected == doctest::Approx(0.3 - 0.1 - 0.1 * 1.7722052470761769).epsilon(1e-12));
  CHECK(spectral::fdi(b8, b6, b11) == doctest::Approx(expected).epsilon(1e-14));

  const IndexRaster r = fdi(bands_scene({{BandId::B6, 0.1f}, {BandId::B11, 0.2f}, {BandId::B8, 0.3f}}));
  CHECK(r.kind == IndexKind::kFdi);
  const double from_floats = 0.3f - (0.1f + (0.2f - 0.1f) * slope);
  CHECK(r.values[0] == doctest::Approx(from_floats).epsilon(1e-12));
}

TEST_CASE("FDI degenerate baselines") {
  // B11 == B6 collapses the interpolation.
  CHECK(fdi(bands_scene({{BandId::B6, 0.2f}, {BandId::B11, 0.2f}, {BandId::B8, 0.5f}})).values[0] ==
        doctest::Approx(0.5f - 0.2f));
  CHECK(fdi(bands_scene({{BandId::B6, 0.4f}, {BandId::B11, 0.4f}, {BandId::B8, 0.4f}})).values[0] == 0.0);
}

TEST_CASE("FDI is linear and NDVI antisymmetric") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double a[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
    const double b[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
    const double k = rng.uniform() * 4 - 2;
    CHECK(spectral::fdi(a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]) ==
          doctest::Approx(spectral::fdi(a[0], a[1], a[2]) + k * spectral::fdi(b[0], b[1], b[2]))
              .epsilon(1e-9));
    const double x = rng.uniform(), y = rng.uniform();
    CHECK(spectral::ndvi(x, y) == -spectral::ndvi(y, x));
    CHECK(std::abs(spectral::ndvi(x, y)) <= 1.0);
  }
}

TEST_CASE("index rasters match the per-pixel formulas") {
  const Scene s = synth::random_scene(13, 7, 99);
  const IndexRaster n = ndvi(s);
  const IndexRaster f = fdi(s);
  REQUIRE(n.width() == 13);
  REQUIRE(f.height() == 7);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 13; ++x) {
      CHECK(n.values(x, y) == spectral::ndvi(s.at(BandId::B8, x, y), s.at(BandId::B4, x, y)));
      CHECK(f.values(x, y) == spectral::fdi(s.at(BandId::B8, x, y), s.at(BandId::B6, x, y),
                                            s.at(BandId::B11, x, y)));
    }
}

TEST_CASE("missing bands are rejected") {
  const Scene s(1, 1, {BandId::B8}, {0.5f});
  CHECK_THROWS_AS(ndvi(s), InvalidArgument);
  CHECK_THROWS_AS(fdi(s), InvalidArgument);
}
