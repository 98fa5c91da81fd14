#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftscan/forest.hpp"
#include "driftscan/metrics.hpp"
#include "driftscan/probability_map.hpp"
#include "driftscan/scene.hpp"

namespace driftscan {

/// Produces debris probabilities for a rectangular window of a scene. The
/// returned grid must match the window extent and hold values in [0, 1].
class PixelScorer {
 public:
  virtual ~PixelScorer() = default;
  virtual std::string id() const = 0;
  virtual Grid<float> score(const Scene& scene, const Rect& window) const = 0;
};

/// Random forest over the 26 pixel features (texture windows see the whole
/// scene, so results do not depend on tiling).
class ForestScorer final : public PixelScorer {
 public:
  explicit ForestScorer(RandomForestModel model);
  std::string id() const override { return "random_forest"; }
  Grid<float> score(const Scene& scene, const Rect& window) const override;
  const RandomForestModel& model() const { return model_; }

 private:
  RandomForestModel model_;
};

/// Serves windows of a precomputed probability raster (e.g. a deep model's
/// output produced elsewhere).
class RasterScorer final : public PixelScorer {
 public:
  explicit RasterScorer(ProbabilityMap map);
  std::string id() const override { return "raster:" + map_.scorer_id; }
  Grid<float> score(const Scene& scene, const Rect& window) const override;

 private:
  ProbabilityMap map_;
};

class ConstantScorer final : public PixelScorer {
 public:
  explicit ConstantScorer(float value) : value_(value) {}
  std::string id() const override { return "constant"; }
  Grid<float> score(const Scene&, const Rect& window) const override {
    return Grid<float>(window.width, window.height, value_);
  }

 private:
  float value_;
};

/// Pixel-local scorer: value = fn(scene, x, y).
class PixelFunctionScorer final : public PixelScorer {
 public:
  using Fn = std::function<float(const Scene&, int, int)>;
  PixelFunctionScorer(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}
  std::string id() const override { return id_; }
  const Fn& fn() const { return fn_; }
  Grid<float> score(const Scene& scene, const Rect& window) const override;

 private:
  std::string id_;
  Fn fn_;
};

struct TilingOptions {
  int tile = 480;
  int overlap = 64;
};

/// Tile origins along one axis: k * (tile - 2 * overlap), the last one
/// clamped to extent - tile. A single origin 0 when extent <= tile.
std::vector<int> tile_origins(int extent, int tile, int overlap);

/// Scores overlapping tiles and keeps, for every pixel, the output of the
/// tile whose center is nearest (lower tile index on ties).
ProbabilityMap predict_scene(const Scene& scene, const PixelScorer& scorer,
                             const TilingOptions& tiling = {});

struct Detection {
  Pixel pixel;
  double map_x = 0.0;  // pixel center in map coordinates
  double map_y = 0.0;
  double probability = 0.0;
  friend bool operator==(const Detection&, const Detection&) = default;
};

struct DetectionSet {
  std::vector<Detection> detections;
  double tau = 0.0;
  int min_distance = 0;
};

/// Local maxima at or above tau (maximal within Chebyshev radius
/// min_distance), thinned greedily in descending probability with row-major
/// tie-break so that survivors are at least min_distance apart.
DetectionSet detect(const ProbabilityMap& map, double tau, int min_distance = 3);

/// GeoJSON FeatureCollection of Points (pixel centers mapped through
/// `geotransform`) with probability and pixel properties.
std::string detections_geojson(const DetectionSet& set, const GeoTransform& geotransform);
void export_detections(const DetectionSet& set, const GeoTransform& geotransform,
                       const std::filesystem::path& geojson_path);
/// CSV with header x,y,map_x,map_y,probability.
void export_detections_csv(const DetectionSet& set, const GeoTransform& geotransform,
                           const std::filesystem::path& csv_path);
std::vector<Detection> read_detections_csv(const std::filesystem::path& csv_path);

struct ValidationStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  friend bool operator==(const ValidationStats&, const ValidationStats&) = default;
};

struct CalibratedThreshold {
  double tau = 0.5;
  std::string method;
  std::optional<ValidationStats> stats;
  friend bool operator==(const CalibratedThreshold&, const CalibratedThreshold&) = default;
};

/// Candidate thresholds are midpoints between consecutive distinct scores
/// (score >= tau predicts debris). Picks the candidate minimizing
/// |precision - recall|, then maximizing F1, then the lowest threshold.
CalibratedThreshold calibrate_threshold(std::span<const ScoredLabel> scores);

std::string to_json(const CalibratedThreshold& t);
CalibratedThreshold threshold_from_json(const std::string& text);
void save_threshold(const CalibratedThreshold& t, const std::filesystem::path& path);
CalibratedThreshold load_threshold(const std::filesystem::path& path);

/// Named reference thresholds: a JSON object mapping names to a number or a
/// list of numbers.
std::map<std::string, std::vector<CalibratedThreshold>> load_reference_thresholds(
    const std::filesystem::path& path);

}  // namespace driftscan
