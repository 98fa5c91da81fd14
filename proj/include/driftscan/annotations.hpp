#pragma once

#include <vector>

#include "driftscan/grid.hpp"
#include "driftscan/mask.hpp"

namespace driftscan {

using Polyline = std::vector<Pixel>;

/// Hand-drawn debris lines in pixel coordinates.
struct LineAnnotationSet {
  std::vector<Polyline> lines;

  /// Throws InvalidArgument unless every polyline has >= 2 vertices inside
  /// a width x height extent.
  void validate(int width, int height) const;
  std::size_t segment_count() const;
};

struct PointAnnotation {
  Pixel at;
  Label label = Label::kOther;
};

/// Point labels of which the annotator is certain.
struct PointAnnotationSet {
  std::vector<PointAnnotation> points;

  void validate(int width, int height) const;
};

}  // namespace driftscan
