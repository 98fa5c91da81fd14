#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "driftscan/cli.hpp"
#include "driftscan/dataset.hpp"
#include "driftscan/error.hpp"
#include "driftscan/flat_io.hpp"
#include "driftscan/geojson.hpp"
#include "driftscan/geotiff.hpp"
#include "driftscan/inference.hpp"
#include "driftscan/metrics.hpp"
#include "driftscan/parallel.hpp"
#include "driftscan/random.hpp"
#include "driftscan/refine.hpp"
#include "json.hpp"

namespace driftscan {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Independent random streams derived from the run seed.
enum Stream : std::uint64_t { kRefineStream = 1, kNegativeStream = 2, kPixelStream = 3, kForestStream = 4 };

std::uint64_t stream_seed(std::uint64_t seed, Stream stream, std::uint64_t index) {
  return derive_seed(derive_seed(seed, stream), index);
}

void log_line(const std::string& level, const std::string& command, const std::string& message,
              json extra = json::object()) {
  extra["level"] = level;
  extra["command"] = command;
  extra["message"] = message;
  std::cerr << extra.dump() << '\n';
}

struct SceneEntry {
  std::size_t index = 0;  // position in the config; keys the random streams
  std::string id;
  fs::path path;
  ProcessingLevel level = ProcessingLevel::L2A;
  CoordinateSpace space = CoordinateSpace::kPixel;
  std::optional<fs::path> annotations;
  std::optional<fs::path> ships;
  std::optional<fs::path> points;
  std::string split = "train";
};

struct Config {
  std::vector<SceneEntry> scenes;
  std::uint64_t seed = 0;
  std::optional<unsigned> threads;
  fs::path refine_dir;
  int patch_size = kPatchSize;
  int per_image = 5;
  std::optional<std::size_t> random_negatives;
  std::optional<fs::path> pixel_csv;
  std::optional<fs::path> patch_dir;
  ForestConfig forest;
  fs::path model;
  fs::path threshold;
  std::optional<double> tau;  // nullopt: read the calibrated threshold file
  TilingOptions tiling;
  fs::path probability_dir;
  fs::path detections_dir;
  fs::path metrics;
  int min_distance = 3;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tau;
  std::optional<int> tile;
  std::optional<int> overlap;
  std::optional<unsigned> threads;
  std::vector<std::string> scenes;
  std::optional<std::string> out;
};

template <typename T>
T get_field(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": missing or wrong type");
  }
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!known.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

Config parse_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  reject_unknown(doc,
                 {"scenes", "seed", "threads", "refine", "dataset", "forest", "model", "threshold",
                  "tau", "tile", "overlap", "probability_dir", "detections_dir", "metrics",
                  "min_distance"},
                 "config");

  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  auto path_or = [&](const char* key, const char* fallback) {
    return resolve(doc.contains(key) ? get_field<std::string>(doc, key, "config") : fallback);
  };

  Config cfg;
  if (!doc.contains("scenes") || !doc["scenes"].is_array() || doc["scenes"].empty())
    throw ConfigError("config.scenes: must be a non-empty array");
  std::set<std::string> ids;
  for (const auto& s : doc["scenes"]) {
    const std::string where = "config.scenes[" + std::to_string(cfg.scenes.size()) + "]";
    if (!s.is_object()) throw ConfigError(where + ": must be an object");
    reject_unknown(s, {"id", "path", "level", "annotations", "annotation_space", "ships", "points", "split"},
                   where);
    SceneEntry e;
    e.index = cfg.scenes.size();
    e.id = get_field<std::string>(s, "id", where);
    if (e.id.empty() || e.id.find_first_of("/\\,\"\n") != std::string::npos)
      throw ConfigError(where + ".id: must be non-empty without / \\ , or quotes");
    if (!ids.insert(e.id).second) throw ConfigError(where + ".id: duplicate scene id '" + e.id + "'");
    e.path = resolve(get_field<std::string>(s, "path", where));
    try {
      if (s.contains("level")) e.level = parse_processing_level(get_field<std::string>(s, "level", where));
      if (s.contains("annotation_space"))
        e.space = parse_coordinate_space(get_field<std::string>(s, "annotation_space", where));
    } catch (const InvalidArgument& err) {
      throw ConfigError(where + ": " + err.what());
    }
    if (s.contains("annotations")) e.annotations = resolve(get_field<std::string>(s, "annotations", where));
    if (s.contains("ships")) e.ships = resolve(get_field<std::string>(s, "ships", where));
    if (s.contains("points")) e.points = resolve(get_field<std::string>(s, "points", where));
    if (s.contains("split")) e.split = get_field<std::string>(s, "split", where);
    if (e.split != "train" && e.split != "val" && e.split != "test")
      throw ConfigError(where + ".split: must be train, val or test");
    cfg.scenes.push_back(std::move(e));
  }

  if (doc.contains("seed")) cfg.seed = get_field<std::uint64_t>(doc, "seed", "config");
  if (doc.contains("threads")) cfg.threads = get_field<unsigned>(doc, "threads", "config");

  json refine = doc.value("refine", json::object());
  reject_unknown(refine, {"out_dir"}, "config.refine");
  cfg.refine_dir = resolve(refine.value("out_dir", std::string("refined")));

  json dataset = doc.value("dataset", json::object());
  reject_unknown(dataset, {"patch_size", "per_image", "random_negatives", "csv", "patch_dir"},
                 "config.dataset");
  if (dataset.contains("patch_size")) cfg.patch_size = get_field<int>(dataset, "patch_size", "config.dataset");
  if (dataset.contains("per_image")) cfg.per_image = get_field<int>(dataset, "per_image", "config.dataset");
  if (dataset.contains("random_negatives"))
    cfg.random_negatives = get_field<std::size_t>(dataset, "random_negatives", "config.dataset");
  if (dataset.contains("csv")) cfg.pixel_csv = resolve(get_field<std::string>(dataset, "csv", "config.dataset"));
  if (dataset.contains("patch_dir"))
    cfg.patch_dir = resolve(get_field<std::string>(dataset, "patch_dir", "config.dataset"));
  if (cfg.patch_size < 1) throw ConfigError("config.dataset.patch_size: must be >= 1");
  if (cfg.per_image < 0) throw ConfigError("config.dataset.per_image: must be >= 0");

  json forest = doc.value("forest", json::object());
  reject_unknown(forest, {"n_trees", "max_depth", "features_per_split", "min_leaf"}, "config.forest");
  cfg.forest.n_trees = forest.contains("n_trees") ? get_field<int>(forest, "n_trees", "config.forest") : 100;
  if (forest.contains("max_depth")) cfg.forest.max_depth = get_field<int>(forest, "max_depth", "config.forest");
  if (forest.contains("features_per_split"))
    cfg.forest.features_per_split = get_field<int>(forest, "features_per_split", "config.forest");
  if (forest.contains("min_leaf")) cfg.forest.min_leaf = get_field<int>(forest, "min_leaf", "config.forest");
  if (cfg.forest.n_trees < 1 || cfg.forest.max_depth < 0 || cfg.forest.features_per_split < 0 ||
      cfg.forest.min_leaf < 1)
    throw ConfigError("config.forest: hyperparameters out of range");

  cfg.model = path_or("model", "model.json");
  cfg.threshold = path_or("threshold", "threshold.json");
  if (doc.contains("tau")) {
    const json& t = doc["tau"];
    if (t.is_string() && t.get<std::string>() == "calibrate") {
    } else if (t.is_number()) {
      cfg.tau = t.get<double>();
    } else {
      throw ConfigError("config.tau: must be a number or \"calibrate\"");
    }
  }
  if (doc.contains("tile")) cfg.tiling.tile = get_field<int>(doc, "tile", "config");
  if (doc.contains("overlap")) cfg.tiling.overlap = get_field<int>(doc, "overlap", "config");
  cfg.probability_dir = path_or("probability_dir", "probability");
  cfg.detections_dir = path_or("detections_dir", "detections");
  cfg.metrics = path_or("metrics", "metrics.json");
  if (doc.contains("min_distance")) cfg.min_distance = get_field<int>(doc, "min_distance", "config");
  if (cfg.min_distance < 0) throw ConfigError("config.min_distance: must be >= 0");
  return cfg;
}

void apply_overrides(Config& cfg, const Overrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.tau) cfg.tau = *o.tau;
  if (o.tile) cfg.tiling.tile = *o.tile;
  if (o.overlap) cfg.tiling.overlap = *o.overlap;
  if (o.threads) cfg.threads = *o.threads;
  if (cfg.tau && !(*cfg.tau > 0.0 && *cfg.tau < 1.0)) throw ConfigError("tau: must lie in (0, 1)");
  if (cfg.tiling.tile < 1 || cfg.tiling.overlap < 0 || cfg.tiling.tile <= 2 * cfg.tiling.overlap)
    throw ConfigError("tile/overlap: tile must exceed twice the overlap");
  for (const auto& id : o.scenes) {
    bool found = false;
    for (const auto& s : cfg.scenes) found |= s.id == id;
    if (!found) throw ConfigError("--scene: unknown scene id '" + id + "'");
  }
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw ConfigError(what + " not found: " + p.string());
}

void check_scene_inputs(const Config& cfg) {
  for (const auto& s : cfg.scenes) {
    const std::string where = "scene '" + s.id + "'";
    require_file(s.path, where + " raster");
    if (s.annotations) require_file(*s.annotations, where + " annotation file");
    if (s.ships) require_file(*s.ships, where + " ship file");
    if (s.points) require_file(*s.points, where + " point file");
  }
}

/// Output files are written under temporary names and renamed together on
/// commit; anything uncommitted is removed.
class StagedOutputs {
 public:
  StagedOutputs() = default;
  StagedOutputs(const StagedOutputs&) = delete;
  StagedOutputs& operator=(const StagedOutputs&) = delete;
  ~StagedOutputs() {
    std::error_code ec;
    for (const auto& [tmp, _] : staged_) fs::remove_all(tmp, ec);
  }

  fs::path stage(const fs::path& final_path) {
    if (final_path.has_parent_path()) fs::create_directories(final_path.parent_path());
    const fs::path tmp = final_path.parent_path() /
                         ("." + final_path.stem().string() + ".partial" + final_path.extension().string());
    std::error_code ec;
    fs::remove_all(tmp, ec);
    staged_.emplace_back(tmp, final_path);
    return tmp;
  }

  void commit() {
    for (const auto& [tmp, final_path] : staged_) {
      if (fs::is_directory(final_path)) fs::remove_all(final_path);
      fs::rename(tmp, final_path);
    }
    staged_.clear();
  }

 private:
  std::vector<std::pair<fs::path, fs::path>> staged_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

Scene load_scene(const SceneEntry& s) {
  const auto ext = s.path.extension().string();
  if (ext == ".tif" || ext == ".tiff" || ext == ".TIF" || ext == ".TIFF") return load_geotiff(s.path, s.level);
  return read_flat(s.path);
}

fs::path refined_path(const Config& cfg, const SceneEntry& s) { return cfg.refine_dir / (s.id + ".dscn"); }
fs::path probability_path(const Config& cfg, const SceneEntry& s) {
  return cfg.probability_dir / (s.id + ".dscn");
}

/// Runs fn with errors prefixed by the scene id.
template <typename Fn>
auto for_scene(const SceneEntry& s, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw Error("scene '" + s.id + "': " + e.what());
  }
}

struct Context {
  Config cfg;
  Overrides overrides;
  std::string command;

  std::vector<const SceneEntry*> select(bool (*keep)(const SceneEntry&)) const {
    std::vector<const SceneEntry*> out;
    for (const auto& s : cfg.scenes) {
      if (!overrides.scenes.empty() &&
          std::find(overrides.scenes.begin(), overrides.scenes.end(), s.id) == overrides.scenes.end())
        continue;
      if (keep(s)) out.push_back(&s);
    }
    return out;
  }

  /// --out for commands producing one file per scene applies only when a
  /// single scene is selected.
  fs::path per_scene_out(const fs::path& fallback, std::size_t selected) const {
    if (!overrides.out) return fallback;
    if (selected != 1) throw ConfigError("--out: needs exactly one selected scene");
    return *overrides.out;
  }

  double resolve_tau() const {
    if (cfg.tau) return *cfg.tau;
    require_file(cfg.threshold, "threshold file");
    return load_threshold(cfg.threshold).tau;
  }
};

int cmd_refine(const Context& ctx) {
  const auto scenes = ctx.select([](const SceneEntry& s) { return s.annotations.has_value(); });
  if (scenes.empty()) throw ConfigError("refine: no selected scene has an annotation file");
  const fs::path out_dir = ctx.overrides.out ? fs::path(*ctx.overrides.out) : ctx.cfg.refine_dir;

  StagedOutputs outputs;
  json summary = json::array();
  for (const SceneEntry* s : scenes) {
    for_scene(*s, [&] {
      const Scene scene = load_scene(*s);
      const auto lines = read_line_annotations(*s->annotations, s->space, scene.geotransform(),
                                               scene.width(), scene.height());
      const auto result =
          refine_labels(scene, lines, stream_seed(ctx.cfg.seed, kRefineStream, s->index));
      write_flat_stack(refinement_to_stack(result, scene), outputs.stage(out_dir / (s->id + ".dscn")));
      std::size_t degenerate = 0;
      for (const auto& c : result.configurations) degenerate += c.degenerate;
      for (const auto& w : result.warnings) log_line("warning", ctx.command, w, {{"scene", s->id}});
      summary.push_back({{"id", s->id},
                         {"mask_count", result.masks.size()},
                         {"agreement", result.agreement()},
                         {"degenerate", result.degenerate},
                         {"degenerate_configurations", degenerate},
                         {"segments", lines.segment_count()}});
      log_line("info", ctx.command, "refined", {{"scene", s->id}, {"agreement", result.agreement()}});
    });
  }
  const json doc = {{"schema", "driftscan.refine_summary"},
                    {"version", 1},
                    {"seed", ctx.cfg.seed},
                    {"scenes", std::move(summary)}};
  write_text(outputs.stage(out_dir / "summary.json"), doc.dump(2) + "\n");
  outputs.commit();
  return kExitOk;
}

int cmd_train(const Context& ctx) {
  const Config& cfg = ctx.cfg;
  const auto scenes = ctx.select([](const SceneEntry& s) {
    return s.split == "train" && (s.annotations || s.ships);
  });
  if (scenes.empty()) throw ConfigError("train: no train-split scene has annotations or ships");
  for (const SceneEntry* s : scenes)
    if (s->annotations) require_file(refined_path(cfg, *s), "refined masks for scene '" + s->id + "'");

  std::vector<LabeledPatch> patches;
  for (const SceneEntry* s : scenes) {
    for_scene(*s, [&] {
      const Scene scene = load_scene(*s);
      Mask annotated(scene.width(), scene.height(), Label::kOther);
      std::size_t line_patches = 0;
      if (s->annotations) {
        const auto lines = read_line_annotations(*s->annotations, s->space, scene.geotransform(),
                                                 scene.width(), scene.height());
        const auto refinement = refinement_from_stack(read_flat_stack(refined_path(cfg, *s)));
        for (std::size_t k = 0; k < annotated.size(); ++k)
          if (refinement.average[k] > 0.0f) annotated[k] = Label::kDebris;
        auto from_lines = patches_from_lines(scene, lines, refinement, s->id, SourceTag::kFlobs,
                                             cfg.patch_size);
        line_patches = from_lines.size();
        std::move(from_lines.begin(), from_lines.end(), std::back_inserter(patches));
      }
      const std::size_t n_random = cfg.random_negatives.value_or(line_patches);
      auto random = random_negatives(scene, annotated, n_random,
                                     stream_seed(cfg.seed, kNegativeStream, s->index), s->id,
                                     cfg.patch_size);
      std::move(random.begin(), random.end(), std::back_inserter(patches));
      if (s->ships) {
        const auto centers = read_point_locations(*s->ships, s->space, scene.geotransform(),
                                                  scene.width(), scene.height());
        auto ships = ship_negatives(scene, centers, s->id, cfg.patch_size);
        std::move(ships.begin(), ships.end(), std::back_inserter(patches));
      }
    });
  }
  if (patches.empty()) throw Error("train: no patches were produced");

  PixelSamplingStats stats;
  const auto pixels =
      pixel_dataset(patches, cfg.per_image, stream_seed(cfg.seed, kPixelStream, 0), &stats);
  log_line("info", ctx.command, "pixel dataset",
           {{"patches", stats.patches},
            {"positives", stats.positives},
            {"negatives", stats.negatives},
            {"short_positive_patches", stats.short_positive},
            {"short_negative_patches", stats.short_negative}});
  const TrainingSet training = to_training_set(pixels);
  bool has_pos = false, has_neg = false;
  for (auto y : training.y) (y ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw Error("train: pixel dataset lacks one of the classes");

  StagedOutputs outputs;
  if (cfg.pixel_csv) write_pixel_csv(pixels, outputs.stage(*cfg.pixel_csv));
  if (cfg.patch_dir) write_patch_dataset(patches, outputs.stage(*cfg.patch_dir));
  const auto model = train_forest(training, cfg.forest, stream_seed(cfg.seed, kForestStream, 0));
  const fs::path model_path = ctx.overrides.out ? fs::path(*ctx.overrides.out) : cfg.model;
  save_model(model, outputs.stage(model_path));
  outputs.commit();
  log_line("info", ctx.command, "model written", {{"path", model_path.string()}, {"rows", training.rows()}});
  return kExitOk;
}

int cmd_calibrate(const Context& ctx) {
  const Config& cfg = ctx.cfg;
  const auto scenes = ctx.select([](const SceneEntry& s) { return s.split == "val" && s.points.has_value(); });
  if (scenes.empty()) throw ConfigError("calibrate: no val-split scene has a point file");
  require_file(cfg.model, "model file");
  const ForestScorer scorer(load_model(cfg.model));

  std::vector<ScoredLabel> scores;
  for (const SceneEntry* s : scenes) {
    for_scene(*s, [&] {
      const Scene scene = load_scene(*s);
      const auto points = read_point_annotations(*s->points, s->space, scene.geotransform(),
                                                 scene.width(), scene.height());
      for (const auto& p : points.points) {
        const auto v = scorer.score(scene, {p.at.x, p.at.y, 1, 1});
        scores.push_back({static_cast<double>(v[0]), p.label == Label::kDebris});
      }
    });
  }
  const auto threshold = calibrate_threshold(scores);
  StagedOutputs outputs;
  const fs::path path = ctx.overrides.out ? fs::path(*ctx.overrides.out) : cfg.threshold;
  save_threshold(threshold, outputs.stage(path));
  outputs.commit();
  log_line("info", ctx.command, "threshold calibrated", {{"tau", threshold.tau}, {"points", scores.size()}});
  return kExitOk;
}

int cmd_predict(const Context& ctx) {
  const Config& cfg = ctx.cfg;
  const auto scenes = ctx.select([](const SceneEntry&) { return true; });
  require_file(cfg.model, "model file");
  const fs::path single = ctx.per_scene_out(fs::path(), scenes.size());
  const ForestScorer scorer(load_model(cfg.model));

  StagedOutputs outputs;
  for (const SceneEntry* s : scenes) {
    for_scene(*s, [&] {
      const Scene scene = load_scene(*s);
      const auto map = predict_scene(scene, scorer, cfg.tiling);
      save_probability_map(map, outputs.stage(single.empty() ? probability_path(cfg, *s) : single));
      log_line("info", ctx.command, "probability map written", {{"scene", s->id}});
    });
  }
  outputs.commit();
  return kExitOk;
}

int cmd_detect(const Context& ctx) {
  const Config& cfg = ctx.cfg;
  const auto scenes = ctx.select([](const SceneEntry&) { return true; });
  for (const SceneEntry* s : scenes)
    require_file(probability_path(cfg, *s), "probability map for scene '" + s->id + "'");
  const double tau = ctx.resolve_tau();
  const fs::path single = ctx.per_scene_out(fs::path(), scenes.size());

  StagedOutputs outputs;
  for (const SceneEntry* s : scenes) {
    for_scene(*s, [&] {
      const auto map = load_probability_map(probability_path(cfg, *s));
      const auto set = detect(map, tau, cfg.min_distance);
      const fs::path path = single.empty() ? cfg.detections_dir / (s->id + ".geojson") : single;
      write_text(outputs.stage(path), detections_geojson(set, map.geotransform));
      log_line("info", ctx.command, "detections written",
               {{"scene", s->id}, {"count", set.detections.size()}, {"tau", tau}});
    });
  }
  outputs.commit();
  return kExitOk;
}

int cmd_evaluate(const Context& ctx) {
  const Config& cfg = ctx.cfg;
  const auto scenes =
      ctx.select([](const SceneEntry& s) { return s.split == "test" && s.points.has_value(); });
  if (scenes.empty()) throw ConfigError("evaluate: no test-split scene has a point file");
  for (const SceneEntry* s : scenes)
    require_file(probability_path(cfg, *s), "probability map for scene '" + s->id + "'");
  const double tau = ctx.resolve_tau();

  json per_scene = json::object();
  std::vector<ScoredLabel> all;
  for (const SceneEntry* s : scenes) {
    for_scene(*s, [&] {
      const auto map = load_probability_map(probability_path(cfg, *s));
      const auto points = read_point_annotations(*s->points, s->space, map.geotransform,
                                                 map.width(), map.height());
      points.validate(map.width(), map.height());
      std::vector<ScoredLabel> scores;
      for (const auto& p : points.points)
        scores.push_back({static_cast<double>(map.values(p.at.x, p.at.y)), p.label == Label::kDebris});
      try {
        per_scene[s->id] = json::parse(to_json(evaluate_scores(scores, tau)));
      } catch (const UndefinedMetric& e) {
        per_scene[s->id] = {{"error", e.what()}, {"samples", scores.size()}};
        log_line("warning", ctx.command, e.what(), {{"scene", s->id}});
      }
      all.insert(all.end(), scores.begin(), scores.end());
    });
  }
  const auto overall = evaluate_scores(all, tau);
  const json doc = {{"schema", "driftscan.metrics"},
                    {"version", 1},
                    {"protocol", "center_pixel"},
                    {"tau", tau},
                    {"scenes", std::move(per_scene)},
                    {"overall", json::parse(to_json(overall))}};
  StagedOutputs outputs;
  const fs::path path = ctx.overrides.out ? fs::path(*ctx.overrides.out) : cfg.metrics;
  write_text(outputs.stage(path), doc.dump(2) + "\n");
  outputs.commit();
  std::cerr << to_table(overall, "overall");
  return kExitOk;
}

std::optional<unsigned> env_threads() {
  const char* v = std::getenv("DRIFTSCAN_THREADS");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  if (*end != '\0') throw ConfigError("DRIFTSCAN_THREADS: not an integer: " + std::string(v));
  return static_cast<unsigned>(n);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"driftscan: marine debris label refinement, training and detection"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  Overrides o;
  std::uint64_t seed = 0;
  double tau = 0.0;
  int tile = 0, overlap = 0;
  unsigned threads = 0;
  std::string out;
  auto* seed_opt = app.add_option("--seed", seed, "Master random seed");
  auto* tau_opt = app.add_option("--tau", tau, "Decision threshold in (0, 1)");
  auto* tile_opt = app.add_option("--tile", tile, "Inference tile size in pixels");
  auto* overlap_opt = app.add_option("--overlap", overlap, "Tile overlap in pixels");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads (0 = all cores)");
  app.add_option("--scene", o.scenes, "Restrict to these scene ids");
  auto* out_opt = app.add_option("--out", out, "Override the command's output path");
  app.add_option("--config", config_path, "Pipeline configuration JSON")->required();

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"refine", "Refine line annotations into the 25-mask ensemble"},
      {"train", "Sample the pixel dataset and train the random forest"},
      {"calibrate", "Balance precision and recall on validation points"},
      {"predict", "Tiled whole-scene probability maps"},
      {"detect", "Extract point detections as GeoJSON"},
      {"evaluate", "Center-pixel metrics on test points"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  Context ctx;
  ctx.command = command;
  try {
    if (*seed_opt) o.seed = seed;
    if (*tau_opt) o.tau = tau;
    if (*tile_opt) o.tile = tile;
    if (*overlap_opt) o.overlap = overlap;
    if (*threads_opt) o.threads = threads;
    if (*out_opt) o.out = out;
    ctx.cfg = parse_config(config_path);
    if (!o.threads) o.threads = env_threads();
    apply_overrides(ctx.cfg, o);
    ctx.overrides = o;
    check_scene_inputs(ctx.cfg);
    set_thread_count(ctx.cfg.threads.value_or(0));

    if (command == "refine") return cmd_refine(ctx);
    if (command == "train") return cmd_train(ctx);
    if (command == "calibrate") return cmd_calibrate(ctx);
    if (command == "predict") return cmd_predict(ctx);
    if (command == "detect") return cmd_detect(ctx);
    return cmd_evaluate(ctx);
  } catch (const ConfigError& e) {
    log_line("error", command, e.what(), {{"exit_code", kExitConfig}});
    return kExitConfig;
  } catch (const std::exception& e) {
    log_line("error", command, e.what(), {{"exit_code", kExitRuntime}});
    return kExitRuntime;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace driftscan
