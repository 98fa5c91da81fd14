#include "driftscan/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "driftscan/error.hpp"
#include "driftscan/flat_io.hpp"
#include "driftscan/parallel.hpp"
#include "driftscan/random.hpp"
#include "json.hpp"

namespace driftscan {

const char* to_string(SourceTag tag) {
  switch (tag) {
    case SourceTag::kFlobs: return "flobs";
    case SourceTag::kMarida: return "marida";
    case SourceTag::kShips: return "ships";
    case SourceTag::kRandomNegative: return "random_negative";
  }
  return "?";
}

SourceTag parse_source_tag(std::string_view text) {
  for (SourceTag t : {SourceTag::kFlobs, SourceTag::kMarida, SourceTag::kShips,
                      SourceTag::kRandomNegative})
    if (text == to_string(t)) return t;
  throw InvalidArgument("unknown source tag '" + std::string(text) + "'");
}

namespace {

LabeledPatch negative_patch(const Scene& scene, Pixel center, int size, SourceTag tag,
                            const std::string& scene_id) {
  LabeledPatch p;
  p.patch = window(scene, center, size);
  p.targets.emplace_back(size, size, Label::kOther);
  p.tag = tag;
  p.scene_id = scene_id;
  return p;
}

void check_scene_id(const std::string& id) {
  if (id.find_first_of(",\n\r\"") != std::string::npos)
    throw InvalidArgument("scene id may not contain commas, quotes or newlines: " + id);
}

}  // namespace

std::vector<LabeledPatch> patches_from_lines(const Scene& scene, const LineAnnotationSet& lines,
                                             const RefinementResult& refinement,
                                             const std::string& scene_id, SourceTag tag,
                                             int size) {
  if (refinement.masks.size() != RefinementResult::kMaskCount)
    throw InvalidArgument("refinement must hold 25 masks");
  for (const Mask& m : refinement.masks)
    if (!m.same_extent(scene.width(), scene.height()))
      throw InvalidArgument("refinement extent differs from scene");
  if (!refinement.average.same_extent(scene.width(), scene.height()))
    throw InvalidArgument("refinement extent differs from scene");
  lines.validate(scene.width(), scene.height());

  std::vector<LabeledPatch> out;
  for (const Polyline& line : lines.lines) {
    for (std::size_t s = 0; s + 1 < line.size(); ++s) {
      const Pixel mid{(line[s].x + line[s + 1].x) / 2, (line[s].y + line[s + 1].y) / 2};
      LabeledPatch p;
      p.patch = window(scene, mid, size);
      const Rect r = p.patch.rect();
      for (const Mask& m : refinement.masks) p.targets.push_back(m.crop(r));
      p.average = refinement.average.crop(r);
      p.tag = tag;
      p.scene_id = scene_id;
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<LabeledPatch> random_negatives(const Scene& scene, const Mask& annotated_debris,
                                           std::size_t count, std::uint64_t seed,
                                           const std::string& scene_id, int size) {
  const int w = scene.width(), h = scene.height();
  if (!annotated_debris.same_extent(w, h))
    throw InvalidArgument("annotation mask extent differs from scene");
  if (size < 1 || size > w || size > h) throw InvalidArgument("patch size exceeds scene");
  std::vector<LabeledPatch> out;
  if (count == 0) return out;

  // Summed-area table of debris pixels.
  const std::size_t sw = static_cast<std::size_t>(w) + 1;
  std::vector<std::uint32_t> sat(sw * (static_cast<std::size_t>(h) + 1), 0);
  for (int y = 0; y < h; ++y) {
    std::uint32_t row = 0;
    for (int x = 0; x < w; ++x) {
      row += annotated_debris(x, y) == Label::kDebris;
      sat[(y + 1) * sw + x + 1] = sat[y * sw + x + 1] + row;
    }
  }
  auto debris_in = [&](const Rect& r) {
    const std::size_t x0 = r.x, y0 = r.y, x1 = r.x + r.width, y1 = r.y + r.height;
    return sat[y1 * sw + x1] + sat[y0 * sw + x0] - sat[y0 * sw + x1] - sat[y1 * sw + x0];
  };

  Rng rng(seed);
  const std::size_t max_draws = 1000 * count;
  std::size_t draws = 0;
  while (out.size() < count) {
    if (draws++ >= max_draws) throw Error("scene saturated");
    const Pixel c{static_cast<int>(rng.below(w)), static_cast<int>(rng.below(h))};
    const Rect r{clamped_origin(c.x, size, w), clamped_origin(c.y, size, h), size, size};
    if (debris_in(r) != 0) continue;
    out.push_back(negative_patch(scene, c, size, SourceTag::kRandomNegative, scene_id));
  }
  return out;
}

std::vector<LabeledPatch> ship_negatives(const Scene& scene, const std::vector<Pixel>& centers,
                                         const std::string& scene_id, int size) {
  std::vector<LabeledPatch> out;
  for (const Pixel& c : centers) {
    if (c.x < 0 || c.y < 0 || c.x >= scene.width() || c.y >= scene.height())
      throw InvalidArgument("ship center (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                            ") outside scene");
    out.push_back(negative_patch(scene, c, size, SourceTag::kShips, scene_id));
  }
  return out;
}

std::vector<LabeledPixel> pixel_dataset(const std::vector<LabeledPatch>& patches,
                                        int per_image, std::uint64_t seed,
                                        PixelSamplingStats* stats) {
  if (patches.empty()) throw InvalidArgument("pixel_dataset needs at least one patch");
  if (per_image < 0) throw InvalidArgument("per_image must be >= 0");

  struct PatchDraw {
    std::vector<LabeledPixel> pixels;
    bool short_pos = false, short_neg = false;
    std::size_t pos = 0, neg = 0;
  };
  std::vector<PatchDraw> draws(patches.size());

  parallel_for(0, patches.size(), [&](std::size_t i) {
    const LabeledPatch& lp = patches[i];
    if (lp.targets.empty()) throw InvalidArgument("patch without targets");
    const int n = lp.patch.size;
    std::vector<std::uint32_t> pos, neg;
    for (int k = 0; k < n * n; ++k) {
      const bool debris = lp.average ? (*lp.average)[k] >= 0.5f
                                     : lp.targets.front()[k] == Label::kDebris;
      (debris ? pos : neg).push_back(static_cast<std::uint32_t>(k));
    }
    Rng rng(derive_seed(seed, i));
    // Partial Fisher-Yates: the first `take` entries become the sample.
    auto sample = [&](std::vector<std::uint32_t>& pool) {
      const std::size_t take = std::min<std::size_t>(per_image, pool.size());
      for (std::size_t j = 0; j < take; ++j)
        std::swap(pool[j], pool[j + rng.below(pool.size() - j)]);
      pool.resize(take);
    };
    sample(pos);
    sample(neg);

    PatchDraw& d = draws[i];
    d.short_pos = pos.size() < static_cast<std::size_t>(per_image);
    d.short_neg = neg.size() < static_cast<std::size_t>(per_image);
    d.pos = pos.size();
    d.neg = neg.size();
    auto emit = [&](std::uint32_t k, Label label) {
      const Pixel at{lp.patch.origin.x + static_cast<int>(k % n),
                     lp.patch.origin.y + static_cast<int>(k / n)};
      d.pixels.push_back(
          {extract_features(lp.patch.parent, at.x, at.y), label, lp.scene_id, at});
    };
    for (auto k : pos) emit(k, Label::kDebris);
    for (auto k : neg) emit(k, Label::kOther);
  });

  std::vector<LabeledPixel> out;
  PixelSamplingStats s;
  s.patches = patches.size();
  for (auto& d : draws) {
    s.positives += d.pos;
    s.negatives += d.neg;
    s.short_positive += d.short_pos;
    s.short_negative += d.short_neg;
    for (auto& p : d.pixels) out.push_back(std::move(p));
  }
  if (stats) *stats = s;
  return out;
}

TrainingSet to_training_set(const std::vector<LabeledPixel>& pixels) {
  TrainingSet set;
  set.n_features = kFeatureCount;
  set.x.reserve(pixels.size() * kFeatureCount);
  set.y.reserve(pixels.size());
  for (const auto& p : pixels) set.add(p.features, p.label == Label::kDebris);
  return set;
}

void write_pixel_csv(const std::vector<LabeledPixel>& pixels, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& name : feature_names()) out << name << ',';
  out << "label,scene,x,y\n";
  char buf[32];
  for (const auto& p : pixels) {
    check_scene_id(p.scene_id);
    for (double v : p.features) {
      std::snprintf(buf, sizeof buf, "%.17g,", v);
      out << buf;
    }
    out << (p.label == Label::kDebris ? 1 : 0) << ',' << p.scene_id << ',' << p.origin.x << ','
        << p.origin.y << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<LabeledPixel> read_pixel_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::string expected;
  for (const auto& name : feature_names()) (expected += name) += ',';
  expected += "label,scene,x,y";
  if (line != expected) throw SchemaError("unexpected pixel CSV header in " + path.string());

  std::vector<LabeledPixel> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != kFeatureCount + 4) throw SchemaError("malformed pixel CSV row");
    LabeledPixel p;
    try {
      for (std::size_t f = 0; f < kFeatureCount; ++f) p.features[f] = std::stod(cells[f]);
      const int label = std::stoi(cells[kFeatureCount]);
      if (label != 0 && label != 1) throw SchemaError("label must be 0 or 1");
      p.label = label ? Label::kDebris : Label::kOther;
      p.scene_id = cells[kFeatureCount + 1];
      p.origin = {std::stoi(cells[kFeatureCount + 2]), std::stoi(cells[kFeatureCount + 3])};
    } catch (const std::logic_error&) {
      throw SchemaError("malformed pixel CSV row: " + line);
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_patch_dataset(const std::vector<LabeledPatch>& patches,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json entries = nlohmann::json::array();
  char name[32];
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const LabeledPatch& p = patches[i];
    RasterStack stack = to_stack(p.patch.as_scene());
    for (std::size_t t = 0; t < p.targets.size(); ++t) {
      std::snprintf(name, sizeof name, "TARGET_%02zu", t);
      stack.names.emplace_back(name);
      auto& plane = stack.planes.emplace_back(p.targets[t].size());
      for (std::size_t k = 0; k < plane.size(); ++k)
        plane[k] = p.targets[t][k] == Label::kDebris ? 1.0f : 0.0f;
    }
    if (p.average) {
      stack.names.emplace_back("AVERAGE");
      const auto v = p.average->values();
      stack.planes.emplace_back(v.begin(), v.end());
    }
    std::snprintf(name, sizeof name, "patch_%05zu.dscn", i);
    write_flat_stack(stack, dir / name);
    entries.push_back({{"file", name},
                       {"scene", p.scene_id},
                       {"tag", to_string(p.tag)},
                       {"origin", {p.patch.origin.x, p.patch.origin.y}},
                       {"size", p.patch.size},
                       {"targets", p.targets.size()},
                       {"average", p.average.has_value()}});
  }
  const nlohmann::json manifest = {{"schema", "driftscan.patch_dataset"},
                                   {"version", 1},
                                   {"patches", std::move(entries)}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw Error("write failed: " + (dir / "manifest.json").string());
}

}  // namespace driftscan
