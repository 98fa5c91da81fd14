#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "driftscan/mask.hpp"

namespace driftscan {

/// A classifier score with its true label (positive = debris).
struct ScoredLabel {
  double score = 0.0;
  bool positive = false;
};

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Counts with debris as the positive class. Unlabeled entries are rejected.
ConfusionCounts confusion(std::span<const Label> predicted, std::span<const Label> truth);

// Each throws UndefinedMetric when its denominator is zero.
double accuracy(const ConfusionCounts& c);
double precision(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);
double f_score(const ConfusionCounts& c);
double jaccard(const ConfusionCounts& c);
/// Cohen's kappa against chance agreement from the marginals.
double kappa(const ConfusionCounts& c);

/// Mann-Whitney AUROC, ties counted as half, via average ranks.
double auroc(std::span<const ScoredLabel> scores);

struct MetricsReport {
  double accuracy = 0.0;
  double f_score = 0.0;
  double auroc = 0.0;
  double jaccard = 0.0;
  double kappa = 0.0;
  double threshold = 0.0;
  std::size_t samples = 0;
  ConfusionCounts counts;
};

/// Thresholds scores at tau (score >= tau is debris) and computes every metric.
/// Throws UndefinedMetric when any metric is undefined for the sample.
MetricsReport evaluate_scores(std::span<const ScoredLabel> scores, double tau);

std::string to_json(const MetricsReport& report);
/// Plain-text table with one metric per row.
std::string to_table(const MetricsReport& report, const std::string& column = "model");

}  // namespace driftscan

#include "driftscan/annotations.hpp"
#include "driftscan/probability_map.hpp"

namespace driftscan {

/// Center-pixel protocol: reads the map at each annotated point, thresholds
/// at tau and reports confusion metrics; AUROC uses the raw probabilities.
MetricsReport evaluate_points(const ProbabilityMap& map, const PointAnnotationSet& points,
                              double tau);

}  // namespace driftscan
