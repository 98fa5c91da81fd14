#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace driftscan {

/// The twelve Sentinel-2 bands carried by a scene. The haze band B10 is
/// deliberately absent.
enum class BandId : unsigned char {
  B1, B2, B3, B4, B5, B6, B7, B8, B8A, B9, B11, B12,
};

inline constexpr std::size_t kBandCount = 12;

inline constexpr std::array<BandId, kBandCount> kAllBands = {
    BandId::B1, BandId::B2, BandId::B3, BandId::B4,  BandId::B5,  BandId::B6,
    BandId::B7, BandId::B8, BandId::B8A, BandId::B9, BandId::B11, BandId::B12,
};

struct BandInfo {
  BandId id;
  std::string_view name;
  double center_wavelength_nm;
};

// Sentinel-2A central wavelengths.
inline constexpr std::array<BandInfo, kBandCount> kBandRegistry = {{
    {BandId::B1, "B1", 442.7},   {BandId::B2, "B2", 492.4},
    {BandId::B3, "B3", 559.8},   {BandId::B4, "B4", 664.6},
    {BandId::B5, "B5", 704.1},   {BandId::B6, "B6", 740.5},
    {BandId::B7, "B7", 782.8},   {BandId::B8, "B8", 832.8},
    {BandId::B8A, "B8A", 864.7}, {BandId::B9, "B9", 945.1},
    {BandId::B11, "B11", 1613.7}, {BandId::B12, "B12", 2202.4},
}};

constexpr const BandInfo& band_info(BandId id) {
  return kBandRegistry[static_cast<std::size_t>(id)];
}
constexpr std::string_view band_name(BandId id) { return band_info(id).name; }
constexpr double wavelength_nm(BandId id) {
  return band_info(id).center_wavelength_nm;
}

/// Parses "B8A", "b8a", "B08" and similar spellings.
std::optional<BandId> parse_band(std::string_view name);

}  // namespace driftscan
