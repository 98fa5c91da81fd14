#pragma once

#include <cstdint>

#include "driftscan/grid.hpp"

namespace driftscan {

enum class Label : std::uint8_t { kOther = 0, kDebris = 1, kUnlabeled = 2 };

/// Crisp per-pixel labels.
using Mask = Grid<Label>;
/// Per-pixel debris membership in [0, 1].
using FuzzyMask = Grid<float>;

inline std::size_t count_label(const Mask& m, Label l) {
  std::size_t n = 0;
  for (Label v : m.values()) n += v == l;
  return n;
}

/// Debris iff membership >= level.
inline Mask threshold_fuzzy(const FuzzyMask& fuzzy, float level = 0.5f) {
  Mask out(fuzzy.width(), fuzzy.height(), Label::kOther);
  for (std::size_t i = 0; i < fuzzy.size(); ++i)
    if (fuzzy[i] >= level) out[i] = Label::kDebris;
  return out;
}

}  // namespace driftscan
