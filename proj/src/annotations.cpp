#include "driftscan/annotations.hpp"

#include <string>

namespace driftscan {

void LineAnnotationSet::validate(int width, int height) const {
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].size() < 2)
      throw InvalidArgument("line " + std::to_string(i) + " has fewer than 2 vertices");
    for (const Pixel& p : lines[i])
      if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height)
        throw InvalidArgument("line " + std::to_string(i) + " vertex (" +
                              std::to_string(p.x) + "," + std::to_string(p.y) +
                              ") outside extent");
  }
}

std::size_t LineAnnotationSet::segment_count() const {
  std::size_t n = 0;
  for (const auto& l : lines) n += l.size() > 1 ? l.size() - 1 : 0;
  return n;
}

void PointAnnotationSet::validate(int width, int height) const {
  for (const auto& p : points) {
    if (p.at.x < 0 || p.at.y < 0 || p.at.x >= width || p.at.y >= height)
      throw InvalidArgument("point (" + std::to_string(p.at.x) + "," +
                            std::to_string(p.at.y) + ") outside extent");
    if (p.label == Label::kUnlabeled)
      throw InvalidArgument("point annotations must be debris or other");
  }
}

}  // namespace driftscan
