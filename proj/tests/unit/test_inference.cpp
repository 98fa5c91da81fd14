#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "driftscan/features.hpp"
#include "driftscan/inference.hpp"
#include "driftscan/parallel.hpp"
#include "driftscan/random.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "tempdir.hpp"

using namespace driftscan;

namespace {

const std::filesystem::path kFixtures = DRIFTSCAN_FIXTURE_DIR;

float hash_value(const Scene&, int x, int y) {
  return static_cast<float>(mix_seed(static_cast<std::uint64_t>(y) * 100003 + x) >> 40) /
         static_cast<float>(1 << 24);
}

ProbabilityMap map_of(Grid<float> g, GeoTransform gt = {}) {
  ProbabilityMap m;
  m.values = std::move(g);
  m.geotransform = gt;
  return m;
}

class WrongExtentScorer final : public PixelScorer {
 public:
  std::string id() const override { return "wrong"; }
  Grid<float> score(const Scene&, const Rect& w) const override { return Grid<float>(w.width + 1, w.height, 0.0f); }
};

}  // namespace

TEST_CASE("tile origins follow the ceil grid") {
  CHECK(tile_origins(100, 480, 64) == std::vector<int>{0});
  CHECK(tile_origins(480, 480, 64) == std::vector<int>{0});
  CHECK(tile_origins(481, 480, 64) == std::vector<int>{0, 1});
  const auto xs = tile_origins(3122, 480, 64);
  const auto ys = tile_origins(3843, 480, 64);
  // n = ceil((extent - tile) / (tile - 2 overlap)) + 1
  CHECK(xs.size() == static_cast<std::size_t>(std::ceil((3122.0 - 480) / 352)) + 1);
  CHECK(xs.size() == 9);
  CHECK(ys.size() == 11);
  CHECK(xs.back() == 3122 - 480);
  for (std::size_t i = 0; i + 2 < xs.size(); ++i) CHECK(xs[i + 1] - xs[i] == 352);
  CHECK_THROWS_AS(tile_origins(1000, 128, 64), InvalidArgument);
}

TEST_CASE("predict_scene with a constant scorer") {
  const Scene s = synth::constant_scene(70, 45, 0.1f);
  const ProbabilityMap m = predict_scene(s, ConstantScorer(0.3f), {32, 8});
  CHECK(m.width() == 70);
  CHECK(m.height() == 45);
  for (float v : m.values.values()) REQUIRE(v == 0.3f);
  CHECK(m.scorer_id == "constant");
  CHECK(m.geotransform == s.geotransform());
  CHECK(m.crs == s.crs());
}

TEST_CASE("tiling invariance for a pixel-local scorer") {
  const Scene s = synth::constant_scene(97, 61, 0.0f);
  const PixelFunctionScorer scorer("hash", hash_value);
  const ProbabilityMap direct = predict_scene(s, scorer, {1000, 0});
  for (std::size_t i = 0; i < direct.values.size(); ++i)
    REQUIRE(direct.values[i] == hash_value(s, static_cast<int>(i % 97), static_cast<int>(i / 97)));
  for (TilingOptions t : {TilingOptions{16, 0}, TilingOptions{16, 7}, TilingOptions{40, 3},
                          TilingOptions{61, 20}, TilingOptions{480, 64}, TilingOptions{3, 1}})
    CHECK(predict_scene(s, scorer, t).values == direct.values);
}

TEST_CASE("forest scoring does not depend on tiling or thread count") {
  const Scene s = synth::random_scene(40, 33, 4);
  TrainingSet data;
  data.n_features = kFeatureCount;
  Rng rng(3);
  for (int i = 0; i < 60; ++i) {
    const int x = static_cast<int>(rng.below(40)), y = static_cast<int>(rng.below(33));
    const FeatureVector f = extract_features(s, x, y);
    data.add(f, f[13] > 0.0);
  }
  ForestConfig cfg;
  cfg.n_trees = 5;
  const ForestScorer scorer(train_forest(data, cfg, 1));
  set_thread_count(1);
  const ProbabilityMap a = predict_scene(s, scorer, {16, 4});
  set_thread_count(3);
  const ProbabilityMap b = predict_scene(s, scorer, {25, 2});
  set_thread_count(0);
  CHECK(a.values == b.values);
  CHECK(a.values(7, 9) == static_cast<float>(predict_proba(scorer.model(), extract_features(s, 7, 9))));

  RandomForestModel wrong;
  wrong.n_features = 3;
  CHECK_THROWS_AS(ForestScorer{wrong}, InvalidArgument);
}

TEST_CASE("predict_scene contract checks") {
  const Scene s = synth::constant_scene(20, 20, 0.0f);
  CHECK_THROWS_AS(predict_scene(s, ConstantScorer(1.5f), {8, 2}), ContractViolation);
  CHECK_THROWS_AS(predict_scene(s, ConstantScorer(-0.01f), {8, 2}), ContractViolation);
  CHECK_THROWS_AS(predict_scene(s, ConstantScorer(std::nanf("")), {8, 2}), ContractViolation);
  CHECK_THROWS_AS(predict_scene(s, WrongExtentScorer(), {8, 2}), ContractViolation);
  CHECK_THROWS_AS(predict_scene(s, ConstantScorer(0.5f), {8, 4}), InvalidArgument);
  CHECK(predict_scene(s, ConstantScorer(1.0f), {8, 2}).values(19, 19) == 1.0f);
}

TEST_CASE("raster pass-through scorer") {
  const Scene s = synth::constant_scene(12, 9, 0.0f);
  Grid<float> g(12, 9);
  Rng rng(1);
  for (float& v : g.values()) v = static_cast<float>(rng.uniform());
  ProbabilityMap ext = map_of(g);
  ext.scorer_id = "unet";
  const RasterScorer scorer(ext);
  CHECK(scorer.id() == "raster:unet");
  CHECK(predict_scene(s, scorer, {5, 1}).values == g);
  CHECK_THROWS_AS(predict_scene(synth::constant_scene(13, 9, 0.0f), scorer, {5, 1}), InvalidArgument);
}

TEST_CASE("detect examples") {
  Grid<float> low(10, 10, 0.2f);
  CHECK(detect(map_of(low), 0.5).detections.empty());

  Grid<float> bump(21, 21);
  for (int y = 0; y < 21; ++y)
    for (int x = 0; x < 21; ++x)
      bump(x, y) = static_cast<float>(0.9 * std::exp(-((x - 12) * (x - 12) + (y - 8) * (y - 8)) / 8.0));
  const DetectionSet one = detect(map_of(bump), 0.3);
  REQUIRE(one.detections.size() == 1);
  CHECK(one.detections[0].pixel == Pixel{12, 8});
  CHECK(one.detections[0].probability == bump(12, 8));
  CHECK(one.tau == 0.3);
  CHECK(one.min_distance == 3);

  Grid<float> pair(12, 5, 0.0f);
  pair(4, 2) = 0.8f;
  pair(6, 2) = 0.9f;
  const auto two = detect(map_of(pair), 0.5);
  REQUIRE(two.detections.size() == 1);
  CHECK(two.detections[0].pixel == Pixel{6, 2});
  CHECK(detect(map_of(pair), 0.5, 1).detections.size() == 2);

  // Plateau: the first pixel in row-major order wins.
  Grid<float> plateau(8, 8, 0.0f);
  plateau(3, 4) = 0.7f;
  plateau(4, 4) = 0.7f;
  const auto flat = detect(map_of(plateau), 0.5);
  REQUIRE(flat.detections.size() == 1);
  CHECK(flat.detections[0].pixel == Pixel{3, 4});

  // The threshold is inclusive.
  Grid<float> at(3, 3, 0.0f);
  at(1, 1) = 0.5f;
  CHECK(detect(map_of(at), 0.5).detections.size() == 1);

  CHECK_THROWS_AS(detect(map_of(at), 0.0), InvalidArgument);
  CHECK_THROWS_AS(detect(map_of(at), 1.0), InvalidArgument);
  CHECK_THROWS_AS(detect(map_of(at), 0.5, -1), InvalidArgument);
}

TEST_CASE("detect matches the brute-force oracle and is monotone") {
  Rng rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 1 + static_cast<int>(rng.below(30)), h = 1 + static_cast<int>(rng.below(30));
    Grid<float> g(w, h);
    const bool coarse = trial % 2 == 0;
    for (float& v : g.values())
      v = coarse ? static_cast<float>(rng.below(5)) / 4.0f : static_cast<float>(rng.uniform());
    const double tau = 0.05 + 0.9 * rng.uniform();
    const int d = static_cast<int>(rng.below(5));
    const DetectionSet got = detect(map_of(g), tau, d);
    const auto want = oracle::detect_brute(g, tau, d);
    REQUIRE(got.detections.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      CHECK(got.detections[i].pixel == want[i]);
      CHECK(got.detections[i].probability == g(want[i].x, want[i].y));
    }
    if (!coarse) {
      CHECK(detect(map_of(g), std::min(0.99, tau + 0.1), d).detections.size() <= got.detections.size());
      CHECK(detect(map_of(g), tau, d + 1).detections.size() <= got.detections.size());
    }
  }
}

TEST_CASE("detection exports") {
  testutil::TempDir dir;
  DetectionSet empty;
  empty.tau = 0.5;
  CHECK_FALSE(oracle::geojson_problem(detections_geojson(empty, {})).has_value());
  CHECK(nlohmann::json::parse(detections_geojson(empty, {}))["features"].empty());

  Grid<float> g(30, 30, 0.0f);
  g(10, 20) = 0.75f;
  const DetectionSet one = detect(map_of(g), 0.5);
  const auto doc = nlohmann::json::parse(detections_geojson(one, GeoTransform{}));
  REQUIRE(doc["features"].size() == 1);
  const auto& f = doc["features"][0];
  CHECK(f["geometry"]["coordinates"][0].get<double>() == 10.5);
  CHECK(f["geometry"]["coordinates"][1].get<double>() == 20.5);
  CHECK(f["properties"]["probability"].get<double>() == 0.75);
  CHECK(f["properties"]["pixel_x"].get<int>() == 10);
  CHECK(f["properties"]["pixel_y"].get<int>() == 20);

  // Random detections on a UTM grid: CSV reproduces coordinates exactly.
  Grid<float> r(64, 64);
  Rng rng(4);
  for (float& v : r.values()) v = static_cast<float>(rng.uniform());
  const GeoTransform utm = synth::utm_transform();
  DetectionSet many = detect(map_of(r, utm), 0.6);
  REQUIRE(many.detections.size() > 10);
  for (const auto& d : many.detections) {
    const auto m = utm.to_map(d.pixel.x + 0.5, d.pixel.y + 0.5);
    CHECK(d.map_x == m[0]);
    CHECK(d.map_y == m[1]);
  }
  export_detections_csv(many, utm, dir / "d.csv");
  CHECK(read_detections_csv(dir / "d.csv") == many.detections);
  export_detections(many, utm, dir / "d.geojson");
  CHECK_FALSE(oracle::geojson_problem(testutil::read_bytes(dir / "d.geojson")).has_value());

  testutil::write_bytes(dir / "bad.csv", "a,b\n1,2\n");
  CHECK_THROWS_AS(read_detections_csv(dir / "bad.csv"), SchemaError);
}

TEST_CASE("threshold calibration examples") {
  const std::vector<ScoredLabel> clean = {{0.9, true}, {0.8, true}, {0.1, false}, {0.2, false}};
  const CalibratedThreshold t = calibrate_threshold(clean);
  CHECK(t.tau == 0.5);
  CHECK(t.method == "balanced_precision_recall");
  REQUIRE(t.stats.has_value());
  CHECK(t.stats->precision == 1.0);
  CHECK(t.stats->recall == 1.0);

  const std::vector<ScoredLabel> inverted = {{0.1, true}, {0.2, true}, {0.8, false}, {0.9, false}};
  const CalibratedThreshold u = calibrate_threshold(inverted);
  const auto cands = oracle::calibration_candidates(inverted);
  CHECK(std::find(cands.begin(), cands.end(), u.tau) != cands.end());
  double best = 2.0;
  for (double c : cands)
    if (auto gap = oracle::precision_recall_gap(inverted, c)) best = std::min(best, *gap);
  CHECK(*oracle::precision_recall_gap(inverted, u.tau) == best);

  CHECK_THROWS_AS(calibrate_threshold(std::vector<ScoredLabel>{{0.3, true}, {0.4, true}}), InvalidArgument);
  CHECK_THROWS_AS(calibrate_threshold(std::vector<ScoredLabel>{{0.3, true}, {0.3, false}}), InvalidArgument);
  CHECK_THROWS_AS(calibrate_threshold(std::vector<ScoredLabel>{{3.0, true}, {5.0, false}}), InvalidArgument);
}

TEST_CASE("threshold files") {
  testutil::TempDir dir;
  CalibratedThreshold t{0.4125, "balanced_precision_recall", ValidationStats{0.9, 0.875, 0.8873239436619719}};
  CHECK(threshold_from_json(to_json(t)) == t);
  save_threshold(t, dir / "t.json");
  CHECK(load_threshold(dir / "t.json") == t);
  CalibratedThreshold bare{0.25, "manual", std::nullopt};
  CHECK(threshold_from_json(to_json(bare)) == bare);

  CHECK_THROWS_AS(threshold_from_json("{}"), SchemaError);
  CHECK_THROWS_AS(threshold_from_json(R"({"schema":"driftscan.threshold","tau":1.5,"method":"x"})"), SchemaError);
  CHECK_THROWS_AS(threshold_from_json("not json"), SchemaError);

  const auto refs = load_reference_thresholds(kFixtures / "reference_thresholds.json");
  REQUIRE(refs.count("random_forest") == 1);
  CHECK(refs.at("random_forest").size() == 1);
  CHECK(refs.at("random_forest")[0].tau == 0.663);
  CHECK(refs.at("unet_plus_plus").size() == 3);
  CHECK(refs.at("unet_plus_plus")[2].tau == 0.0254);
  for (const auto& [name, list] : refs)
    for (const auto& r : list) CHECK(threshold_from_json(to_json(r)) == r);

  testutil::write_bytes(dir / "refs.json", R"({"model": [0.5, 2.0]})");
  CHECK_THROWS_AS(load_reference_thresholds(dir / "refs.json"), SchemaError);
}
