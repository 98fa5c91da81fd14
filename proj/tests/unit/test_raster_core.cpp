#include <cmath>
#include <cstring>
#include <limits>

#include "doctest.h"
#include "driftscan/bands.hpp"
#include "driftscan/error.hpp"
#include "driftscan/flat_io.hpp"
#include "driftscan/geotiff.hpp"
#include "driftscan/probability_map.hpp"
#include "driftscan/random.hpp"
#include "driftscan/scene.hpp"
#include "synthetic.hpp"
#include "tempdir.hpp"

using namespace driftscan;

namespace {

const std::filesystem::path kFixtures = DRIFTSCAN_FIXTURE_DIR;

// Digital numbers written by make_tiff_fixtures.py.
double fixture_dn(int band, int x, int y) { return 1000.0 * band + 20.0 * y + x; }
constexpr int kFixtureW = 20, kFixtureH = 13;

Scene filled(int w, int h, std::vector<BandId> bands, float value) {
  std::vector<float> data(static_cast<std::size_t>(w) * h * bands.size(), value);
  return Scene(w, h, std::move(bands), std::move(data));
}

LoadErrorKind load_kind(const auto& fn) {
  try {
    fn();
  } catch (const LoadError& e) {
    return e.kind();
  }
  FAIL("no LoadError raised");
  return LoadErrorKind::kIo;
}

}  // namespace

TEST_CASE("band names parse in common spellings") {
  CHECK(parse_band("B8A") == BandId::B8A);
  CHECK(parse_band("b8a") == BandId::B8A);
  CHECK(parse_band("B08") == BandId::B8);
  CHECK(parse_band("B12") == BandId::B12);
  CHECK_FALSE(parse_band("B10").has_value());
  CHECK_FALSE(parse_band("B13").has_value());
  for (BandId id : kAllBands) CHECK(parse_band(band_name(id)) == id);
}

TEST_CASE("scene band lookup follows the band list, not its order") {
  const std::vector<BandId> bands = {BandId::B8, BandId::B4};
  Scene s(2, 1, bands, {1, 2, 3, 4});
  CHECK(s.has_band(BandId::B8));
  CHECK_FALSE(s.has_band(BandId::B1));
  CHECK(s.at(BandId::B8, 1, 0) == 2.0f);
  CHECK(s.at(BandId::B4, 0, 0) == 3.0f);
  CHECK_THROWS_AS(s.plane(BandId::B1), InvalidArgument);
  CHECK_THROWS_AS(s.require_bands({BandId::B4, BandId::B11}), InvalidArgument);
  CHECK_THROWS_AS(Scene(2, 1, bands, {1, 2, 3}), InvalidArgument);
  CHECK_THROWS_AS(Scene(2, 1, {BandId::B8, BandId::B8}, {1, 2, 3, 4}), InvalidArgument);
}

TEST_CASE("window clamps its origin and preserves size") {
  const Scene s = synth::constant_scene(256, 256, 0.1f);
  CHECK(window(s, {128, 128}, 128).origin == Pixel{64, 64});
  CHECK(window(s, {0, 0}, 128).origin == Pixel{0, 0});
  CHECK(window(s, {255, 255}, 128).origin == Pixel{128, 128});
  CHECK(window(s, {250, 3}, 128).rect() == Rect{128, 0, 128, 128});
  CHECK(window(s, {10, 10}, 256).origin == Pixel{0, 0});
  CHECK_THROWS_AS(window(s, {128, 128}, 512), InvalidArgument);
  CHECK_THROWS_AS(window(s, {128, 128}, 0), InvalidArgument);
}

TEST_CASE("window crop shifts the geotransform and composes") {
  const Scene s = synth::random_scene(40, 30, 5);
  const Patch outer = window(s, {20, 15}, 20);
  const Scene a = outer.as_scene();
  const Scene b = window(a, {12, 9}, 6).as_scene();
  const Scene direct = s.crop({outer.origin.x + 9, outer.origin.y + 6, 6, 6});
  CHECK(b == direct);
  for (BandId id : kAllBands) CHECK(b.at(id, 2, 3) == s.at(id, outer.origin.x + 11, outer.origin.y + 9));
  const auto m = a.geotransform().to_map(0, 0);
  const auto expected = s.geotransform().to_map(outer.origin.x, outer.origin.y);
  CHECK(m[0] == expected[0]);
  CHECK(m[1] == expected[1]);
}

TEST_CASE("geotransform inverse") {
  GeoTransform g{{500000, 10, 0, 4000000, 0, -10}};
  const auto px = g.to_pixel(500105, 3999975);
  CHECK(px[0] == doctest::Approx(10.5));
  CHECK(px[1] == doctest::Approx(2.5));
  GeoTransform singular{{0, 1, 1, 0, 1, 1}};
  CHECK_THROWS_AS(singular.to_pixel(0, 0), InvalidArgument);
}

TEST_CASE("DSCN round trip is bit exact") {
  testutil::TempDir dir;
  Scene s = synth::random_scene(17, 9, 42);
  // Include values that a lossy path would disturb.
  std::vector<float> data(s.data().begin(), s.data().end());
  data[0] = std::numeric_limits<float>::denorm_min();
  data[1] = -0.0f;
  data[2] = std::numeric_limits<float>::infinity();
  data[3] = 0x1.fffffep-1f;
  s = Scene(17, 9, s.bands(), data, synth::utm_transform(), "EPSG:32630", ProcessingLevel::L1C);
  write_flat(s, dir / "s.dscn");
  const Scene back = read_flat(dir / "s.dscn");
  CHECK(back == s);
  CHECK(back.level() == ProcessingLevel::L1C);
  CHECK(back.crs() == "EPSG:32630");
  CHECK(std::memcmp(back.data().data(), s.data().data(), s.data().size_bytes()) == 0);
  CHECK(std::signbit(back.at(BandId::B1, 1, 0)));
}

TEST_CASE("DSCN byte layout of a 1x1 scene") {
  testutil::TempDir dir;
  const Scene s = filled(1, 1, {BandId::B4}, 0.25f);
  write_flat(s, dir / "one.dscn");
  const std::string bytes = testutil::read_bytes(dir / "one.dscn");
  // magic 4 + extent 12 + name (2 + 2) + geotransform 48 + crs (2 + 0) + level 1
  const std::size_t header = 4 + 12 + 4 + 48 + 2 + 1;
  CHECK(flat_header_size({"B4"}, "") == header);
  REQUIRE(bytes.size() == header + 4);
  CHECK(bytes.substr(0, 4) == "DSCN");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);  // width, little-endian
  CHECK(bytes.substr(18, 2) == "B4");
  float v;
  std::memcpy(&v, bytes.data() + header, 4);
  CHECK(v == 0.25f);
}

TEST_CASE("DSCN decoding errors") {
  testutil::TempDir dir;
  write_flat(synth::random_scene(4, 4, 1), dir / "ok.dscn");
  const std::string bytes = testutil::read_bytes(dir / "ok.dscn");

  testutil::write_bytes(dir / "short.dscn", bytes.substr(0, bytes.size() - 1));
  CHECK(load_kind([&] { read_flat(dir / "short.dscn"); }) == LoadErrorKind::kBadLength);
  testutil::write_bytes(dir / "long.dscn", bytes + "x");
  CHECK(load_kind([&] { read_flat(dir / "long.dscn"); }) == LoadErrorKind::kBadLength);
  testutil::write_bytes(dir / "hdr.dscn", bytes.substr(0, 10));
  CHECK(load_kind([&] { read_flat(dir / "hdr.dscn"); }) == LoadErrorKind::kBadLength);

  std::string magic = bytes;
  magic[0] = 'X';
  testutil::write_bytes(dir / "magic.dscn", magic);
  CHECK(load_kind([&] { read_flat(dir / "magic.dscn"); }) == LoadErrorKind::kBadFormat);

  CHECK(load_kind([&] { read_flat(dir / "absent.dscn"); }) == LoadErrorKind::kIo);

  RasterStack nan_stack = to_stack(synth::random_scene(2, 2, 3));
  nan_stack.planes[5][1] = std::numeric_limits<float>::quiet_NaN();
  write_flat_stack(nan_stack, dir / "nan.dscn");
  CHECK(load_kind([&] { read_flat(dir / "nan.dscn"); }) == LoadErrorKind::kNanPayload);

  RasterStack odd = to_stack(synth::random_scene(2, 2, 3));
  odd.names[0] = "TEMPERATURE";
  write_flat_stack(odd, dir / "odd.dscn");
  CHECK(read_flat_stack(dir / "odd.dscn") == odd);
  CHECK(load_kind([&] { read_flat(dir / "odd.dscn"); }) == LoadErrorKind::kBadFormat);
}

TEST_CASE("GeoTIFF: deflate, tiled, planar, predictor fixture from an independent encoder") {
  const Scene s = load_geotiff(kFixtures / "s2_uint16_deflate_tiled_planar.tif", ProcessingLevel::L2A);
  CHECK(s.width() == kFixtureW);
  CHECK(s.height() == kFixtureH);
  CHECK(s.geotransform() == GeoTransform{{500000, 10, 0, 4000000, 0, -10}});
  CHECK(s.crs() == "EPSG:32630");
  for (std::size_t b = 0; b < kBandCount; ++b)
    for (int y = 0; y < kFixtureH; ++y)
      for (int x = 0; x < kFixtureW; ++x)
        REQUIRE(s.at(kAllBands[b], x, y) ==
                static_cast<float>(fixture_dn(static_cast<int>(b), x, y) / 10000.0));
}

TEST_CASE("GeoTIFF: 13-band striped chunky fixture drops B10") {
  const Scene s = load_geotiff(kFixtures / "s2_uint16_striped_13band.tif", ProcessingLevel::L1C);
  CHECK(s.level() == ProcessingLevel::L1C);
  // Canonical 13-band positions; B10 sits at 10.
  const int pos[kBandCount] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 11, 12};
  for (std::size_t b = 0; b < kBandCount; ++b)
    for (int y = 0; y < kFixtureH; ++y)
      for (int x = 0; x < kFixtureW; ++x)
        REQUIRE(s.at(kAllBands[b], x, y) ==
                static_cast<float>(fixture_dn(pos[b], x, y) / 10000.0));
}

TEST_CASE("GeoTIFF: big-endian float32 with a model transformation") {
  const Scene s = load_geotiff(kFixtures / "s2_float32_bigendian.tif", ProcessingLevel::L2A);
  CHECK(s.geotransform() == GeoTransform{{300000, 20, 0, 5000000, 0, -20}});
  CHECK(s.crs() == "EPSG:32736");
  for (std::size_t b = 0; b < kBandCount; ++b)
    for (int y = 0; y < kFixtureH; ++y)
      for (int x = 0; x < kFixtureW; ++x)
        REQUIRE(s.at(kAllBands[b], x, y) ==
                static_cast<float>(fixture_dn(static_cast<int>(b), x, y) / 10000.0));
}

TEST_CASE("GeoTIFF: sidecar band order") {
  const Scene s = load_geotiff(kFixtures / "s2_uint16_sidecar.tif", ProcessingLevel::L2A);
  // The sidecar lists the 13 canonical bands in reverse.
  const int pos[kBandCount] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 11, 12};
  for (std::size_t b = 0; b < kBandCount; ++b)
    CHECK(s.at(kAllBands[b], 3, 4) ==
          static_cast<float>(fixture_dn(12 - pos[b], 3, 4) / 10000.0));
}

TEST_CASE("GeoTIFF: load errors") {
  CHECK(load_kind([] { load_geotiff(kFixtures / "s2_uint16_11band.tif", ProcessingLevel::L2A); }) ==
        LoadErrorKind::kMissingBand);
  CHECK(load_kind([] { load_geotiff(kFixtures / "s2_uint16_nogeo.tif", ProcessingLevel::L2A); }) ==
        LoadErrorKind::kBadGeoreference);
  CHECK(load_kind([] { load_geotiff(kFixtures / "missing.tif", ProcessingLevel::L2A); }) ==
        LoadErrorKind::kIo);

  testutil::TempDir dir;
  const std::string good = testutil::read_bytes(kFixtures / "s2_uint16_deflate_tiled_planar.tif");
  testutil::write_bytes(dir / "cut.tif", good.substr(0, good.size() / 2));
  CHECK_THROWS_AS(load_geotiff(dir / "cut.tif", ProcessingLevel::L2A), LoadError);
  testutil::write_bytes(dir / "junk.tif", "this is not a tiff file");
  CHECK(load_kind([&] { load_geotiff(dir / "junk.tif", ProcessingLevel::L2A); }) ==
        LoadErrorKind::kBadFormat);

  // Float file with a NaN sample.
  TiffImage img;
  img.width = 2;
  img.height = 2;
  img.sample_type = TiffSampleType::kFloat32;
  img.planes.assign(kBandCount, std::vector<float>(4, 0.1f));
  img.planes[7][2] = std::numeric_limits<float>::quiet_NaN();
  img.geotransform = synth::utm_transform();
  img.crs = "EPSG:32630";
  write_tiff(img, dir / "nan.tif");
  CHECK(load_kind([&] { load_geotiff(dir / "nan.tif", ProcessingLevel::L2A); }) ==
        LoadErrorKind::kNanPayload);

  // Sidecar that disagrees with the plane count.
  img.planes[7][2] = 0.1f;
  write_tiff(img, dir / "side.tif");
  testutil::write_bytes(dir / "side.tif.bands", "B1 B2 B3\n");
  CHECK(load_kind([&] { load_geotiff(dir / "side.tif", ProcessingLevel::L2A); }) ==
        LoadErrorKind::kInconsistentDimensions);
}

TEST_CASE("uint16 DN 5000 is reflectance 0.5") {
  testutil::TempDir dir;
  TiffImage img;
  img.width = 3;
  img.height = 2;
  img.sample_type = TiffSampleType::kUInt16;
  img.planes.assign(kBandCount, std::vector<float>(6, 5000.0f));
  img.geotransform = synth::utm_transform();
  img.crs = "EPSG:32630";
  write_tiff(img, dir / "dn.tif", {.deflate = true});
  const Scene s = load_geotiff(dir / "dn.tif", ProcessingLevel::L2A);
  for (float v : s.data()) REQUIRE(v == 0.5f);
}

TEST_CASE("TIFF writer and reader agree for every layout") {
  testutil::TempDir dir;
  for (TiffSampleType type : {TiffSampleType::kUInt8, TiffSampleType::kInt8, TiffSampleType::kUInt16,
                              TiffSampleType::kInt16, TiffSampleType::kFloat32}) {
    TiffImage img;
    img.width = 37;
    img.height = 21;
    img.sample_type = type;
    img.geotransform = synth::utm_transform();
    img.crs = "EPSG:32630";
    driftscan::Rng rng(static_cast<std::uint64_t>(type) + 11);
    for (int p = 0; p < 3; ++p) {
      std::vector<float> plane(static_cast<std::size_t>(img.width) * img.height);
      for (float& v : plane) {
        switch (type) {
          case TiffSampleType::kUInt8: v = static_cast<float>(rng.below(256)); break;
          case TiffSampleType::kInt8: v = static_cast<float>(static_cast<int>(rng.below(256)) - 128); break;
          case TiffSampleType::kUInt16: v = static_cast<float>(rng.below(65536)); break;
          case TiffSampleType::kInt16: v = static_cast<float>(static_cast<int>(rng.below(65536)) - 32768); break;
          case TiffSampleType::kFloat32: v = static_cast<float>(rng.uniform() * 2 - 1); break;
        }
      }
      img.planes.push_back(std::move(plane));
    }
    for (int mask = 0; mask < 16; ++mask) {
      TiffWriteOptions o;
      o.deflate = mask & 1;
      o.tiled = mask & 2;
      o.planar_separate = mask & 4;
      o.horizontal_predictor = (mask & 8) && type != TiffSampleType::kFloat32;
      o.rows_per_strip = 5;
      const auto path = dir / ("t" + std::to_string(mask) + ".tif");
      write_tiff(img, path, o);
      const TiffImage back = read_tiff(path);
      CAPTURE(mask);
      CHECK(back.sample_type == type);
      CHECK(back.width == img.width);
      CHECK(back.height == img.height);
      CHECK(back.planes == img.planes);
      REQUIRE(back.geotransform.has_value());
      CHECK(*back.geotransform == *img.geotransform);
      CHECK(back.crs == img.crs);
    }
  }
}

TEST_CASE("single-band GeoTIFF probability raster") {
  const ProbabilityMap m = load_probability_map(kFixtures / "probability_float32.tif");
  CHECK(m.width() == kFixtureW);
  CHECK(m.height() == kFixtureH);
  for (int y = 0; y < kFixtureH; ++y)
    for (int x = 0; x < kFixtureW; ++x)
      REQUIRE(m.values(x, y) == static_cast<float>(((y * kFixtureW + x) % 11) / 10.0));
  CHECK(m.geotransform == GeoTransform{{500000, 10, 0, 4000000, 0, -10}});

  testutil::TempDir dir;
  save_probability_map(m, dir / "p.dscn");
  save_probability_map(m, dir / "p.tif");
  CHECK(load_probability_map(dir / "p.dscn").values == m.values);
  CHECK(load_probability_map(dir / "p.tif").values == m.values);
}
