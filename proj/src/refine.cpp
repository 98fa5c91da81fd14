#include "driftscan/refine.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "driftscan/parallel.hpp"
#include "driftscan/random.hpp"

namespace driftscan {

namespace {

bool in_list(double v, std::span<const double> list) {
  for (double x : list)
    if (x == v) return true;
  return false;
}

}  // namespace

RefinementParams::RefinementParams(int buffer_px, double beta,
                                   double debris_marker_density) {
  if (buffer_px < 0 || buffer_px > 2)
    throw InvalidArgument("buffer size must be 0, 1 or 2");
  if (!in_list(beta, kBetas)) throw InvalidArgument("beta must be 1 or 10");
  if (!in_list(debris_marker_density, kDebrisDensities))
    throw InvalidArgument("debris marker density must be 0.05, 0.25, 0.5 or 0.75");
  buffer_px_ = buffer_px;
  beta_ = beta;
  debris_density_ = debris_marker_density;
}

RefinementParams RefinementParams::custom(int buffer_px, double beta,
                                          double debris_density, double other_density) {
  if (buffer_px < 0) throw InvalidArgument("buffer size must be >= 0");
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  for (double d : {debris_density, other_density})
    if (!(d > 0.0 && d <= 1.0)) throw InvalidArgument("marker densities must lie in (0, 1]");
  RefinementParams p;
  p.buffer_px_ = buffer_px;
  p.beta_ = beta;
  p.debris_density_ = debris_density;
  p.other_density_ = other_density;
  return p;
}

std::vector<RefinementParams> RefinementParams::grid() {
  std::vector<RefinementParams> out;
  for (int b : kBufferSizes)
    for (double d : kDebrisDensities)
      for (double beta : kBetas) out.emplace_back(b, beta, d);
  return out;
}

double RefinementResult::agreement() const {
  if (average.empty()) return 0.0;
  std::size_t agree = 0;
  for (float v : average.values()) agree += (v == 0.0f || v == 1.0f);
  return static_cast<double>(agree) / static_cast<double>(average.size());
}

Mask rasterize_lines(const LineAnnotationSet& lines, int width, int height) {
  if (width <= 0 || height <= 0) throw InvalidArgument("extent must be positive");
  lines.validate(width, height);
  Mask mask(width, height, Label::kOther);
  for (const auto& line : lines.lines) {
    for (std::size_t s = 0; s + 1 < line.size(); ++s) {
      int x0 = line[s].x, y0 = line[s].y;
      const int x1 = line[s + 1].x, y1 = line[s + 1].y;
      const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
      const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
      int err = dx + dy;
      for (;;) {
        mask(x0, y0) = Label::kDebris;
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) { err += dy; x0 += sx; }
        if (e2 <= dx) { err += dx; y0 += sy; }
      }
    }
  }
  return mask;
}

Mask buffer_mask(const Mask& mask, int radius_px) {
  if (radius_px < 0) throw InvalidArgument("buffer radius must be >= 0");
  if (radius_px == 0) return mask;
  const int w = mask.width();
  const int h = mask.height();
  // Separable square dilation: rows, then columns.
  Grid<std::uint8_t> rows(w, h, 0);
  for (int y = 0; y < h; ++y) {
    int last = std::numeric_limits<int>::min() / 2;  // last debris x seen
    std::vector<int> next(static_cast<std::size_t>(w) + 1, std::numeric_limits<int>::max() / 2);
    for (int x = w - 1; x >= 0; --x)
      next[static_cast<std::size_t>(x)] =
          mask(x, y) == Label::kDebris ? x : next[static_cast<std::size_t>(x) + 1];
    for (int x = 0; x < w; ++x) {
      if (mask(x, y) == Label::kDebris) last = x;
      rows(x, y) = (x - last <= radius_px || next[static_cast<std::size_t>(x)] - x <= radius_px);
    }
  }
  Mask out = mask;
  for (int x = 0; x < w; ++x) {
    int last = std::numeric_limits<int>::min() / 2;
    std::vector<int> next(static_cast<std::size_t>(h) + 1, std::numeric_limits<int>::max() / 2);
    for (int y = h - 1; y >= 0; --y)
      next[static_cast<std::size_t>(y)] = rows(x, y) ? y : next[static_cast<std::size_t>(y) + 1];
    for (int y = 0; y < h; ++y) {
      if (rows(x, y)) last = y;
      if (y - last <= radius_px || next[static_cast<std::size_t>(y)] - y <= radius_px)
        out(x, y) = Label::kDebris;
    }
  }
  return out;
}

double otsu_threshold(std::span<const double> values) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("otsu_threshold needs finite values");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (values.size() < 2 || !(hi > lo)) throw DegenerateHistogram();
  // Keeps |n*S0 - N0*S| below 2^64 so its square fits in 128 bits.
  if (values.size() > (std::size_t{1} << 28)) throw InvalidArgument("otsu_threshold: too many values");

  constexpr int kBins = 256;
  const double width = hi - lo;
  std::int64_t hist[kBins] = {};
  for (double v : values) {
    const int bin = v == hi ? kBins - 1
                            : std::min(kBins - 1, static_cast<int>((v - lo) / width * kBins));
    ++hist[bin];
  }
  const auto n = static_cast<std::int64_t>(values.size());
  std::int64_t total_moment = 0;
  for (int k = 0; k < kBins; ++k) total_moment += k * hist[k];

  // Between-class variance up to a positive constant factor is
  // (n*S0 - N0*S)^2 / (N0*N1); candidates are compared exactly by
  // cross-multiplication in 192-bit arithmetic.
  using u128 = unsigned __int128;
  const auto wide_product = [](u128 a, std::uint64_t b) {
    const u128 low = static_cast<u128>(static_cast<std::uint64_t>(a)) * b;
    const u128 high = (a >> 64) * b + (low >> 64);
    return std::pair<u128, std::uint64_t>(high, static_cast<std::uint64_t>(low));
  };
  std::int64_t n0 = 0, s0 = 0;
  int best = -1;
  u128 best_sq = 0;
  std::uint64_t best_pairs = 1;
  for (int k = 0; k < kBins - 1; ++k) {
    n0 += hist[k];
    s0 += k * hist[k];
    const std::int64_t n1 = n - n0;
    if (n0 == 0 || n1 == 0) continue;
    const __int128 diff = static_cast<__int128>(n) * s0 - static_cast<__int128>(n0) * total_moment;
    const u128 mag = static_cast<u128>(diff < 0 ? -diff : diff);
    const u128 sq = mag * mag;
    const auto pairs = static_cast<std::uint64_t>(n0) * static_cast<std::uint64_t>(n1);
    if (best < 0 || wide_product(sq, best_pairs) > wide_product(best_sq, pairs)) {
      best = k;
      best_sq = sq;
      best_pairs = pairs;
    }
  }
  return lo + (best + 1) * (width / kBins);
}

Mask preliminary_region(const IndexRaster& fdi, const Mask& buffered) {
  if (!buffered.same_extent(fdi.values))
    throw InvalidArgument("buffered mask extent differs from FDI raster");
  std::vector<double> inside;
  for (std::size_t i = 0; i < buffered.size(); ++i)
    if (buffered[i] == Label::kDebris) inside.push_back(fdi.values[i]);
  Mask out(buffered.width(), buffered.height(), Label::kOther);
  if (inside.empty()) return out;
  const double t = otsu_threshold(inside);
  for (std::size_t i = 0; i < buffered.size(); ++i)
    if (buffered[i] == Label::kDebris && fdi.values[i] > t) out[i] = Label::kDebris;
  return out;
}

MarkerMap sample_markers(const Mask& preliminary, const RefinementParams& params,
                         std::uint64_t seed) {
  const std::size_t debris = count_label(preliminary, Label::kDebris);
  if (debris == 0 || debris == preliminary.size())
    throw InvalidArgument("preliminary region needs debris and non-debris pixels");
  constexpr int kMaxAttempts = 100000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    MarkerMap markers(preliminary.width(), preliminary.height(), Marker::kUnlabeled);
    bool any_debris = false, any_other = false;
    for (std::size_t i = 0; i < preliminary.size(); ++i) {
      const double u = rng.uniform();
      if (preliminary[i] == Label::kDebris) {
        if (u < params.debris_marker_density()) {
          markers[i] = Marker::kDebris;
          any_debris = true;
        }
      } else if (u < params.other_marker_density()) {
        markers[i] = Marker::kOther;
        any_other = true;
      }
    }
    if (any_debris && any_other) return markers;
  }
  throw Error("marker sampling failed to draw both classes");
}

namespace {

Mask crisp_walker(const WalkerResult& walk) {
  const auto& p = walk.probability;
  Mask out(p.width(), p.height(), Label::kOther);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.5) out[i] = Label::kDebris;
  return out;
}

std::string describe(const RefinementParams& p) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "buffer=%d beta=%g density=%g", p.buffer_px(), p.beta(),
                p.debris_marker_density());
  return buf;
}

}  // namespace

RefinementResult refine_labels(const Scene& scene, const LineAnnotationSet& lines,
                               std::uint64_t seed) {
  if (lines.lines.empty()) throw InvalidArgument("refine_labels needs at least one line");
  const IndexRaster guidance = fdi(scene);
  const Mask original = rasterize_lines(lines, scene.width(), scene.height());

  const auto grid = RefinementParams::grid();
  constexpr std::size_t kDensities = std::size(RefinementParams::kDebrisDensities);
  constexpr std::size_t kBetas = std::size(RefinementParams::kBetas);
  constexpr std::size_t kBuffers = std::size(RefinementParams::kBufferSizes);

  RefinementResult result;
  result.masks.resize(grid.size());
  for (const auto& p : grid) result.configurations.push_back({p, false, {}, 0});

  std::vector<Mask> buffered(kBuffers);
  std::vector<Mask> preliminary(kBuffers);
  std::vector<std::string> prelim_note(kBuffers);
  for (std::size_t b = 0; b < kBuffers; ++b) {
    buffered[b] = buffer_mask(original, RefinementParams::kBufferSizes[b]);
    try {
      preliminary[b] = preliminary_region(guidance, buffered[b]);
    } catch (const DegenerateHistogram&) {
      preliminary[b] = buffered[b];
      prelim_note[b] = "constant FDI inside buffer; preliminary region = buffer";
    }
  }

  // One task per (buffer, density); both betas share the marker draw.
  parallel_for(0, kBuffers * kDensities, [&](std::size_t task) {
    const std::size_t b = task / kDensities;
    const Mask& prelim = preliminary[b];
    const std::size_t first = task * kBetas;
    const std::size_t debris = count_label(prelim, Label::kDebris);
    auto degenerate = [&](const std::string& why) {
      const Mask& fallback = debris > 0 ? prelim : buffered[b];
      for (std::size_t k = 0; k < kBetas; ++k) {
        result.masks[first + k] = fallback;
        result.configurations[first + k].degenerate = true;
        result.configurations[first + k].note = why;
      }
    };
    if (debris == 0 || debris == prelim.size()) {
      degenerate("preliminary region lacks debris or background pixels");
      return;
    }
    const MarkerMap markers =
        sample_markers(prelim, grid[first], derive_seed(seed, task));
    for (std::size_t k = 0; k < kBetas; ++k) {
      auto& outcome = result.configurations[first + k];
      try {
        const WalkerResult walk = random_walker(guidance, markers, grid[first + k].beta());
        result.masks[first + k] = crisp_walker(walk);
        outcome.solver_iterations = walk.iterations;
        if (walk.undetermined_components > 0)
          outcome.note = std::to_string(walk.undetermined_components) +
                         " unanchored component(s) set to 0.5";
      } catch (const SolverError& e) {
        result.masks[first + k] = prelim;
        outcome.degenerate = true;
        outcome.note = e.what();
      }
    }
  });

  for (std::size_t b = 0; b < kBuffers; ++b)
    if (!prelim_note[b].empty())
      result.warnings.push_back("buffer=" + std::to_string(RefinementParams::kBufferSizes[b]) +
                                ": " + prelim_note[b]);
  bool all_degenerate = true;
  for (const auto& c : result.configurations) {
    if (!c.note.empty()) result.warnings.push_back(describe(c.params) + ": " + c.note);
    all_degenerate &= c.degenerate;
  }
  if (all_degenerate) {
    result.degenerate = true;
    result.warnings.push_back("every configuration degenerated; using the original mask");
    std::fill(result.masks.begin(), result.masks.end(), original);
  }
  result.masks.push_back(original);

  result.average = FuzzyMask(scene.width(), scene.height(), 0.0f);
  std::vector<int> votes(original.size(), 0);
  for (const Mask& m : result.masks)
    for (std::size_t i = 0; i < m.size(); ++i) votes[i] += m[i] == Label::kDebris;
  const auto count = static_cast<float>(result.masks.size());
  for (std::size_t i = 0; i < votes.size(); ++i)
    result.average[i] = static_cast<float>(votes[i]) / count;
  return result;
}

RasterStack refinement_to_stack(const RefinementResult& result, const Scene& scene) {
  RasterStack stack;
  stack.width = scene.width();
  stack.height = scene.height();
  stack.geotransform = scene.geotransform();
  stack.crs = scene.crs();
  stack.level = scene.level();
  for (std::size_t i = 0; i < result.masks.size(); ++i) {
    char name[8];
    std::snprintf(name, sizeof name, "M%02zu", i);
    stack.names.emplace_back(name);
    std::vector<float> plane(result.masks[i].size());
    for (std::size_t k = 0; k < plane.size(); ++k)
      plane[k] = result.masks[i][k] == Label::kDebris ? 1.0f : 0.0f;
    stack.planes.push_back(std::move(plane));
  }
  stack.names.emplace_back("AVERAGE");
  const auto avg = result.average.values();
  stack.planes.emplace_back(avg.begin(), avg.end());
  return stack;
}

RefinementResult refinement_from_stack(const RasterStack& stack) {
  if (stack.planes.size() != RefinementResult::kMaskCount + 1 ||
      stack.names.back() != "AVERAGE")
    throw SchemaError("refinement stack must hold 25 masks and an AVERAGE plane");
  RefinementResult result;
  for (std::size_t i = 0; i < RefinementResult::kMaskCount; ++i) {
    Mask m(stack.width, stack.height, Label::kOther);
    for (std::size_t k = 0; k < m.size(); ++k)
      if (stack.planes[i][k] >= 0.5f) m[k] = Label::kDebris;
    result.masks.push_back(std::move(m));
  }
  result.average = FuzzyMask(stack.width, stack.height, stack.planes.back());
  return result;
}

}  // namespace driftscan
