#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "driftscan/annotations.hpp"
#include "driftscan/features.hpp"
#include "driftscan/forest.hpp"
#include "driftscan/refine.hpp"
#include "driftscan/scene.hpp"

namespace driftscan {

enum class SourceTag { kFlobs, kMarida, kShips, kRandomNegative };

const char* to_string(SourceTag tag);
SourceTag parse_source_tag(std::string_view text);

inline constexpr int kPatchSize = 128;

struct LabeledPatch {
  Patch patch;
  /// Refined patches carry all 25 ensemble masks; negatives carry a single
  /// all-other mask. Every target has the patch extent.
  std::vector<Mask> targets;
  /// Ensemble average over the patch, present for refined patches.
  std::optional<FuzzyMask> average;
  SourceTag tag = SourceTag::kFlobs;
  std::string scene_id;
};

struct LabeledPixel {
  FeatureVector features{};
  Label label = Label::kOther;
  std::string scene_id;
  /// Scene pixel coordinates.
  Pixel origin;
};

/// One patch per annotated segment, centered on its integer midpoint.
std::vector<LabeledPatch> patches_from_lines(const Scene& scene, const LineAnnotationSet& lines,
                                             const RefinementResult& refinement,
                                             const std::string& scene_id,
                                             SourceTag tag = SourceTag::kFlobs,
                                             int size = kPatchSize);

/// Uniform random centers whose clamped window holds no pixel of
/// `annotated_debris`. Throws Error("scene saturated") after 1000 * count
/// rejected draws.
std::vector<LabeledPatch> random_negatives(const Scene& scene, const Mask& annotated_debris,
                                           std::size_t count, std::uint64_t seed,
                                           const std::string& scene_id, int size = kPatchSize);

std::vector<LabeledPatch> ship_negatives(const Scene& scene, const std::vector<Pixel>& centers,
                                         const std::string& scene_id, int size = kPatchSize);

struct PixelSamplingStats {
  std::size_t patches = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t short_positive = 0;  // patches with fewer than per_image debris pixels
  std::size_t short_negative = 0;
};

/// Up to per_image debris and per_image other pixels per patch, drawn without
/// replacement on the substream derive_seed(seed, patch index). Debris means
/// average >= 0.5 when an average is present, else the first target.
std::vector<LabeledPixel> pixel_dataset(const std::vector<LabeledPatch>& patches,
                                        int per_image, std::uint64_t seed,
                                        PixelSamplingStats* stats = nullptr);

TrainingSet to_training_set(const std::vector<LabeledPixel>& pixels);

/// Columns: the 26 feature names, label, scene, x, y.
void write_pixel_csv(const std::vector<LabeledPixel>& pixels, const std::filesystem::path& path);
std::vector<LabeledPixel> read_pixel_csv(const std::filesystem::path& path);

/// One DSCN file per patch (scene bands, then TARGET_nn planes and AVERAGE
/// when present) plus manifest.json.
void write_patch_dataset(const std::vector<LabeledPatch>& patches,
                         const std::filesystem::path& dir);

}  // namespace driftscan
