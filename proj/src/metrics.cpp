#include "driftscan/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <vector>

#include "json.hpp"

namespace driftscan {
namespace {

double ratio(double num, double den, const char* what) {
  if (den == 0.0) throw UndefinedMetric(what);
  return num / den;
}

}  // namespace

ConfusionCounts confusion(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size())
    throw InvalidArgument("prediction and truth lengths differ");
  if (predicted.empty()) throw InvalidArgument("confusion needs at least one sample");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == Label::kUnlabeled || truth[i] == Label::kUnlabeled)
      throw InvalidArgument("confusion inputs must be debris or other");
    const bool p = predicted[i] == Label::kDebris;
    const bool t = truth[i] == Label::kDebris;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double accuracy(const ConfusionCounts& c) {
  return ratio(static_cast<double>(c.tp + c.tn), static_cast<double>(c.total()), "accuracy");
}

double precision(const ConfusionCounts& c) {
  return ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp), "precision");
}

double recall(const ConfusionCounts& c) {
  return ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn), "recall");
}

double f_score(const ConfusionCounts& c) {
  const double p = precision(c);
  const double r = recall(c);
  return ratio(2.0 * p * r, p + r, "f-score");
}

double jaccard(const ConfusionCounts& c) {
  return ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp + c.fn), "jaccard");
}

double kappa(const ConfusionCounts& c) {
  const double n = static_cast<double>(c.total());
  if (n == 0.0) throw UndefinedMetric("kappa");
  const double po = static_cast<double>(c.tp + c.tn) / n;
  const double pe = (static_cast<double>(c.tp + c.fp) * static_cast<double>(c.tp + c.fn) +
                     static_cast<double>(c.fn + c.tn) * static_cast<double>(c.fp + c.tn)) /
                    (n * n);
  return ratio(po - pe, 1.0 - pe, "kappa");
}

double auroc(std::span<const ScoredLabel> scores) {
  std::vector<ScoredLabel> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });
  double pos = 0.0, neg = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    double tie_pos = 0.0;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      tie_pos += sorted[j].positive;
      ++j;
    }
    // Ranks i+1 .. j share their average.
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    rank_sum += tie_pos * avg_rank;
    pos += tie_pos;
    neg += static_cast<double>(j - i) - tie_pos;
    i = j;
  }
  if (pos == 0.0 || neg == 0.0) throw UndefinedMetric("auroc (single class)");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

MetricsReport evaluate_scores(std::span<const ScoredLabel> scores, double tau) {
  if (scores.empty()) throw InvalidArgument("no samples to evaluate");
  MetricsReport r;
  for (const auto& s : scores) {
    const bool p = s.score >= tau;
    if (p && s.positive) ++r.counts.tp;
    else if (p) ++r.counts.fp;
    else if (s.positive) ++r.counts.fn;
    else ++r.counts.tn;
  }
  r.accuracy = accuracy(r.counts);
  r.f_score = f_score(r.counts);
  r.auroc = auroc(scores);
  r.jaccard = jaccard(r.counts);
  r.kappa = kappa(r.counts);
  r.threshold = tau;
  r.samples = scores.size();
  return r;
}

std::string to_json(const MetricsReport& r) {
  const nlohmann::json doc = {
      {"accuracy", r.accuracy}, {"f_score", r.f_score}, {"auroc", r.auroc},
      {"jaccard", r.jaccard},   {"kappa", r.kappa},     {"threshold", r.threshold},
      {"samples", r.samples},
      {"confusion", {{"tp", r.counts.tp}, {"fp", r.counts.fp},
                     {"fn", r.counts.fn}, {"tn", r.counts.tn}}},
  };
  return doc.dump(2);
}

std::string to_table(const MetricsReport& r, const std::string& column) {
  std::string out;
  char line[96];
  std::snprintf(line, sizeof line, "%-10s %10s\n", "", column.c_str());
  out += line;
  const std::pair<const char*, double> rows[] = {{"accuracy", r.accuracy},
                                                 {"f-score", r.f_score},
                                                 {"auroc", r.auroc},
                                                 {"jaccard", r.jaccard},
                                                 {"kappa", r.kappa}};
  for (const auto& [name, value] : rows) {
    std::snprintf(line, sizeof line, "%-10s %10.3f\n", name, value);
    out += line;
  }
  return out;
}

}  // namespace driftscan

namespace driftscan {

MetricsReport evaluate_points(const ProbabilityMap& map, const PointAnnotationSet& points,
                              double tau) {
  points.validate(map.width(), map.height());
  std::vector<ScoredLabel> scores;
  scores.reserve(points.points.size());
  for (const auto& p : points.points)
    scores.push_back({static_cast<double>(map.values(p.at.x, p.at.y)),
                      p.label == Label::kDebris});
  return evaluate_scores(scores, tau);
}

}  // namespace driftscan
