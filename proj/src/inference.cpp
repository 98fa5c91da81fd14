#include "driftscan/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_map>

#include "driftscan/features.hpp"
#include "driftscan/parallel.hpp"
#include "json.hpp"

namespace driftscan {

ForestScorer::ForestScorer(RandomForestModel model) : model_(std::move(model)) {
  if (model_.n_features != kFeatureCount)
    throw InvalidArgument("forest scorer needs a model over " +
                          std::to_string(kFeatureCount) + " features");
}

Grid<float> ForestScorer::score(const Scene& scene, const Rect& window) const {
  Grid<float> out(window.width, window.height);
  constexpr int kRowsPerChunk = 16;
  const int chunks = (window.height + kRowsPerChunk - 1) / kRowsPerChunk;
  parallel_for(0, static_cast<std::size_t>(chunks), [&](std::size_t c) {
    const int y0 = static_cast<int>(c) * kRowsPerChunk;
    const int rows = std::min(kRowsPerChunk, window.height - y0);
    const auto features =
        extract_features(scene, {window.x, window.y + y0, window.width, rows});
    for (std::size_t i = 0; i < features.size(); ++i)
      out[static_cast<std::size_t>(y0) * window.width + i] =
          static_cast<float>(predict_proba(model_, features[i]));
  });
  return out;
}

RasterScorer::RasterScorer(ProbabilityMap map) : map_(std::move(map)) { map_.validate(); }

Grid<float> RasterScorer::score(const Scene& scene, const Rect& window) const {
  if (!map_.values.same_extent(scene.width(), scene.height()))
    throw InvalidArgument("probability raster extent differs from scene");
  return map_.values.crop(window);
}

Grid<float> PixelFunctionScorer::score(const Scene& scene, const Rect& window) const {
  Grid<float> out(window.width, window.height);
  for (int y = 0; y < window.height; ++y)
    for (int x = 0; x < window.width; ++x) out(x, y) = fn_(scene, window.x + x, window.y + y);
  return out;
}

std::vector<int> tile_origins(int extent, int tile, int overlap) {
  if (tile < 1 || overlap < 0 || tile <= 2 * overlap)
    throw InvalidArgument("tile must exceed twice the overlap");
  if (extent <= tile) return {0};
  const int stride = tile - 2 * overlap;
  const int n = (extent - tile + stride - 1) / stride + 1;
  std::vector<int> out;
  for (int k = 0; k < n; ++k) out.push_back(std::min(k * stride, extent - tile));
  return out;
}

namespace {

struct AxisPlan {
  std::vector<int> origin;
  int size = 0;
  std::vector<std::pair<int, int>> keep;  // [begin, end) kept from each tile
};

AxisPlan plan_axis(int extent, int tile, int overlap) {
  AxisPlan plan;
  plan.origin = tile_origins(extent, tile, overlap);
  plan.size = std::min(tile, extent);
  const std::size_t n = plan.origin.size();
  plan.keep.assign(n, {0, 0});
  std::size_t k = 0;
  for (int p = 0; p < extent; ++p) {
    const double c = p + 0.5;
    auto dist = [&](std::size_t i) { return std::abs(c - (plan.origin[i] + plan.size / 2.0)); };
    while (k + 1 < n && dist(k + 1) < dist(k)) ++k;
    if (plan.keep[k].second == plan.keep[k].first) plan.keep[k].first = p;
    plan.keep[k].second = p + 1;
  }
  return plan;
}

}  // namespace

ProbabilityMap predict_scene(const Scene& scene, const PixelScorer& scorer,
                             const TilingOptions& tiling) {
  const AxisPlan px = plan_axis(scene.width(), tiling.tile, tiling.overlap);
  const AxisPlan py = plan_axis(scene.height(), tiling.tile, tiling.overlap);

  ProbabilityMap map;
  map.values = Grid<float>(scene.width(), scene.height(), 0.0f);
  map.scorer_id = scorer.id();
  map.geotransform = scene.geotransform();
  map.crs = scene.crs();

  const std::size_t nx = px.origin.size();
  parallel_for(0, nx * py.origin.size(), [&](std::size_t t) {
    const std::size_t ix = t % nx;
    const std::size_t iy = t / nx;
    const auto [kx0, kx1] = px.keep[ix];
    const auto [ky0, ky1] = py.keep[iy];
    if (kx0 == kx1 || ky0 == ky1) return;
    const Rect window{px.origin[ix], py.origin[iy], px.size, py.size};
    const Grid<float> tile = scorer.score(scene, window);
    if (!tile.same_extent(window.width, window.height))
      throw ContractViolation("scorer '" + scorer.id() + "' returned the wrong extent");
    for (float v : tile.values())
      if (!(v >= 0.0f && v <= 1.0f))
        throw ContractViolation("scorer '" + scorer.id() + "' returned a value outside [0, 1]");
    for (int y = ky0; y < ky1; ++y)
      for (int x = kx0; x < kx1; ++x) map.values(x, y) = tile(x - window.x, y - window.y);
  });
  return map;
}

DetectionSet detect(const ProbabilityMap& map, double tau, int min_distance) {
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("tau must lie in (0, 1)");
  if (min_distance < 0) throw InvalidArgument("min_distance must be >= 0");
  const auto& v = map.values;
  const int w = v.width();
  const int h = v.height();

  struct Candidate {
    float p;
    int x, y;
  };
  constexpr int kRowsPerBlock = 64;
  const auto blocks = static_cast<std::size_t>((h + kRowsPerBlock - 1) / kRowsPerBlock);
  std::vector<std::vector<Candidate>> found(blocks);
  parallel_for(0, blocks, [&](std::size_t b) {
    const int y_end = std::min(h, static_cast<int>(b + 1) * kRowsPerBlock);
    for (int y = static_cast<int>(b) * kRowsPerBlock; y < y_end; ++y) {
      for (int x = 0; x < w; ++x) {
        const float p = v(x, y);
        if (!(p >= tau)) continue;
        bool is_max = true;
        const int y0 = std::max(0, y - min_distance), y1 = std::min(h - 1, y + min_distance);
        const int x0 = std::max(0, x - min_distance), x1 = std::min(w - 1, x + min_distance);
        for (int yy = y0; yy <= y1 && is_max; ++yy)
          for (int xx = x0; xx <= x1; ++xx)
            if (v(xx, yy) > p) {
              is_max = false;
              break;
            }
        if (is_max) found[b].push_back({p, x, y});
      }
    }
  });
  std::vector<Candidate> candidates;
  for (auto& f : found) candidates.insert(candidates.end(), f.begin(), f.end());
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.p > b.p; });

  // Accepted points bucketed on a min_distance grid; a conflict can only sit
  // in the 3x3 neighboring cells.
  const int cell = std::max(1, min_distance);
  std::unordered_map<std::int64_t, std::vector<Pixel>> buckets;
  auto key = [](int cx, int cy) {
    return (static_cast<std::int64_t>(cx) << 32) ^ static_cast<std::uint32_t>(cy);
  };
  DetectionSet set;
  set.tau = tau;
  set.min_distance = min_distance;
  for (const Candidate& c : candidates) {
    const int cx = c.x / cell, cy = c.y / cell;
    bool clear = true;
    for (int dy = -1; dy <= 1 && clear; ++dy)
      for (int dx = -1; dx <= 1 && clear; ++dx) {
        const auto it = buckets.find(key(cx + dx, cy + dy));
        if (it == buckets.end()) continue;
        for (const Pixel& q : it->second)
          if (chebyshev(q, {c.x, c.y}) < min_distance) {
            clear = false;
            break;
          }
      }
    if (!clear) continue;
    buckets[key(cx, cy)].push_back({c.x, c.y});
    const auto m = map.geotransform.to_map(c.x + 0.5, c.y + 0.5);
    set.detections.push_back({{c.x, c.y}, m[0], m[1], c.p});
  }
  return set;
}

std::string detections_geojson(const DetectionSet& set, const GeoTransform& gt) {
  using nlohmann::json;
  json features = json::array();
  for (const auto& d : set.detections) {
    const auto m = gt.to_map(d.pixel.x + 0.5, d.pixel.y + 0.5);
    features.push_back({
        {"type", "Feature"},
        {"geometry", {{"type", "Point"}, {"coordinates", {m[0], m[1]}}}},
        {"properties",
         {{"probability", d.probability}, {"pixel_x", d.pixel.x}, {"pixel_y", d.pixel.y}}},
    });
  }
  const json doc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  return doc.dump(2) + "\n";
}

void export_detections(const DetectionSet& set, const GeoTransform& gt,
                       const std::filesystem::path& geojson_path) {
  std::ofstream out(geojson_path, std::ios::trunc);
  if (!out) throw Error("cannot write " + geojson_path.string());
  out << detections_geojson(set, gt);
  if (!out) throw Error("write failed: " + geojson_path.string());
}

void export_detections_csv(const DetectionSet& set, const GeoTransform& gt,
                           const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path, std::ios::trunc);
  if (!out) throw Error("cannot write " + csv_path.string());
  out << "x,y,map_x,map_y,probability\n";
  char line[160];
  for (const auto& d : set.detections) {
    const auto m = gt.to_map(d.pixel.x + 0.5, d.pixel.y + 0.5);
    std::snprintf(line, sizeof line, "%d,%d,%.17g,%.17g,%.17g\n", d.pixel.x, d.pixel.y, m[0],
                  m[1], d.probability);
    out << line;
  }
  if (!out) throw Error("write failed: " + csv_path.string());
}

std::vector<Detection> read_detections_csv(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw Error("cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(in, line) || line != "x,y,map_x,map_y,probability")
    throw SchemaError("unexpected detection CSV header");
  std::vector<Detection> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Detection d;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf", &d.pixel.x, &d.pixel.y, &d.map_x,
                    &d.map_y, &d.probability) != 5)
      throw SchemaError("malformed detection CSV row: " + line);
    out.push_back(d);
  }
  return out;
}

CalibratedThreshold calibrate_threshold(std::span<const ScoredLabel> scores) {
  std::vector<ScoredLabel> sorted(scores.begin(), scores.end());
  for (const auto& s : sorted)
    if (!std::isfinite(s.score)) throw InvalidArgument("scores must be finite");
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });
  std::int64_t npos = 0;
  for (const auto& s : sorted) npos += s.positive;
  const auto n = static_cast<std::int64_t>(sorted.size());
  if (npos == 0 || npos == n) throw InvalidArgument("calibration needs both labels");

  // Sweep from the top; after consuming each block of equal scores, the next
  // lower distinct score defines one candidate midpoint.
  struct Best {
    std::int64_t tp = -1, pp = 0;
    double tau = 0.0;
  } best;
  using i128 = __int128;
  auto better = [&](std::int64_t tp, std::int64_t pp, double tau) {
    if (best.tp < 0) return true;
    // |P - R| = tp * |npos - pp| / (pp * npos); compare cross-multiplied.
    const i128 lhs = static_cast<i128>(tp) * (npos > pp ? npos - pp : pp - npos) * best.pp;
    const i128 rhs = static_cast<i128>(best.tp) *
                     (npos > best.pp ? npos - best.pp : best.pp - npos) * pp;
    if (lhs != rhs) return lhs < rhs;
    // F1 = 2 tp / (pp + npos).
    const i128 f_new = static_cast<i128>(tp) * (best.pp + npos);
    const i128 f_old = static_cast<i128>(best.tp) * (pp + npos);
    if (f_new != f_old) return f_new > f_old;
    return tau < best.tau;
  };

  std::int64_t tp = 0, pp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      tp += sorted[j].positive;
      ++pp;
      ++j;
    }
    if (j == sorted.size()) break;
    const double hi = sorted[i].score, lo = sorted[j].score;
    double tau = lo + (hi - lo) / 2.0;
    if (!(tau > lo)) tau = hi;  // adjacent doubles: keep "score >= tau" semantics
    if (better(tp, pp, tau)) best = {tp, pp, tau};
    i = j;
  }
  if (best.tp < 0) throw InvalidArgument("all scores are identical; no candidate threshold");
  if (!(best.tau > 0.0 && best.tau < 1.0))
    throw InvalidArgument("calibrated threshold outside (0, 1); scores must be probabilities");

  CalibratedThreshold out;
  out.tau = best.tau;
  out.method = "balanced_precision_recall";
  ValidationStats stats;
  stats.precision = static_cast<double>(best.tp) / static_cast<double>(best.pp);
  stats.recall = static_cast<double>(best.tp) / static_cast<double>(npos);
  stats.f1 = 2.0 * static_cast<double>(best.tp) / static_cast<double>(best.pp + npos);
  out.stats = stats;
  return out;
}

namespace {
constexpr const char* kThresholdSchema = "driftscan.threshold";
}

std::string to_json(const CalibratedThreshold& t) {
  nlohmann::json doc = {{"schema", kThresholdSchema}, {"version", 1},
                        {"tau", t.tau},               {"method", t.method}};
  if (t.stats)
    doc["validation"] = {{"precision", t.stats->precision},
                         {"recall", t.stats->recall},
                         {"f1", t.stats->f1}};
  return doc.dump(2) + "\n";
}

CalibratedThreshold threshold_from_json(const std::string& text) {
  CalibratedThreshold t;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("schema").get<std::string>() != kThresholdSchema)
      throw SchemaError("not a threshold file");
    t.tau = doc.at("tau").get<double>();
    t.method = doc.at("method").get<std::string>();
    if (doc.contains("validation")) {
      const auto& v = doc["validation"];
      t.stats = ValidationStats{v.at("precision").get<double>(), v.at("recall").get<double>(),
                                v.at("f1").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("threshold schema mismatch: ") + e.what());
  }
  if (!(t.tau > 0.0 && t.tau < 1.0)) throw SchemaError("threshold tau outside (0, 1)");
  return t;
}

void save_threshold(const CalibratedThreshold& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(t);
}

CalibratedThreshold load_threshold(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return threshold_from_json(
      std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

std::map<std::string, std::vector<CalibratedThreshold>> load_reference_thresholds(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::map<std::string, std::vector<CalibratedThreshold>> out;
  try {
    const auto doc = nlohmann::json::parse(in);
    if (!doc.is_object()) throw SchemaError("reference thresholds must be a JSON object");
    for (const auto& [name, value] : doc.items()) {
      auto& list = out[name];
      const auto add = [&](const nlohmann::json& v) {
        const double tau = v.get<double>();
        if (!(tau > 0.0 && tau < 1.0)) throw SchemaError("reference tau outside (0, 1)");
        list.push_back({tau, "reference", std::nullopt});
      };
      if (value.is_array())
        for (const auto& v : value) add(v);
      else
        add(value);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("reference thresholds: ") + e.what());
  }
  return out;
}

}  // namespace driftscan
