#include "driftscan/flat_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace driftscan {
namespace {

constexpr char kMagic[4] = {'D', 'S', 'C', 'N'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v), 4); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    if (s.size() > 0xFFFF) throw InvalidArgument("DSCN string too long");
    u16(static_cast<std::uint16_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  const std::string& bytes() const { return bytes_; }
  void reserve(std::size_t n) { bytes_.reserve(n); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>(v >> (8 * i)));
  }
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(le(4))); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str() {
    const std::size_t n = u16();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n)
      throw LoadError(LoadErrorKind::kBadLength, "DSCN file truncated");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t flat_header_size(const std::vector<std::string>& names,
                             const std::string& crs) {
  std::size_t n = 4 + 3 * 4;
  for (const auto& name : names) n += 2 + name.size();
  return n + 6 * 8 + 2 + crs.size() + 1;
}

void write_flat_stack(const RasterStack& stack,
                      const std::filesystem::path& path) {
  const std::size_t plane_size =
      static_cast<std::size_t>(stack.width) * stack.height;
  if (stack.width <= 0 || stack.height <= 0 ||
      stack.names.size() != stack.planes.size())
    throw InvalidArgument("invalid raster stack");
  for (const auto& p : stack.planes)
    if (p.size() != plane_size)
      throw InvalidArgument("raster stack plane has wrong size");

  Writer w;
  w.reserve(flat_header_size(stack.names, stack.crs) +
            plane_size * stack.planes.size() * 4);
  for (char ch : kMagic) w.u8(static_cast<std::uint8_t>(ch));
  w.u32(static_cast<std::uint32_t>(stack.width));
  w.u32(static_cast<std::uint32_t>(stack.height));
  w.u32(static_cast<std::uint32_t>(stack.names.size()));
  for (const auto& name : stack.names) w.str(name);
  for (double c : stack.geotransform.c) w.f64(c);
  w.str(stack.crs);
  w.u8(static_cast<std::uint8_t>(stack.level));
  for (const auto& p : stack.planes)
    for (float v : p) w.f32(v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError(LoadErrorKind::kIo, "cannot open " + path.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw LoadError(LoadErrorKind::kIo, "write failed: " + path.string());
}

RasterStack read_flat_stack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadErrorKind::kIo, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() < 4)
    throw LoadError(LoadErrorKind::kBadLength, "DSCN file truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw LoadError(LoadErrorKind::kBadFormat, "bad magic in " + path.string());

  Reader r(bytes);
  for (int i = 0; i < 4; ++i) r.u8();
  RasterStack stack;
  const std::uint32_t width = r.u32();
  const std::uint32_t height = r.u32();
  const std::uint32_t bands = r.u32();
  if (width == 0 || height == 0 || width > (1u << 30) || height > (1u << 30))
    throw LoadError(LoadErrorKind::kBadFormat, "invalid DSCN extent");
  stack.width = static_cast<int>(width);
  stack.height = static_cast<int>(height);
  for (std::uint32_t i = 0; i < bands; ++i) stack.names.push_back(r.str());
  for (double& c : stack.geotransform.c) c = r.f64();
  stack.crs = r.str();
  const std::uint8_t level = r.u8();
  if (level > 1) throw LoadError(LoadErrorKind::kBadFormat, "bad processing level");
  stack.level = static_cast<ProcessingLevel>(level);

  const std::size_t plane_size = static_cast<std::size_t>(width) * height;
  if (r.remaining() != plane_size * bands * 4)
    throw LoadError(LoadErrorKind::kBadLength,
                    "DSCN payload has " + std::to_string(r.remaining()) +
                        " bytes, expected " +
                        std::to_string(plane_size * bands * 4));
  stack.planes.resize(bands);
  for (auto& p : stack.planes) {
    p.resize(plane_size);
    for (float& v : p) v = r.f32();
  }
  return stack;
}

RasterStack to_stack(const Scene& scene) {
  RasterStack stack;
  stack.width = scene.width();
  stack.height = scene.height();
  for (std::size_t i = 0; i < scene.bands().size(); ++i) {
    stack.names.emplace_back(band_name(scene.bands()[i]));
    const auto p = scene.plane_at(i);
    stack.planes.emplace_back(p.begin(), p.end());
  }
  stack.geotransform = scene.geotransform();
  stack.crs = scene.crs();
  stack.level = scene.level();
  return stack;
}

Scene to_scene(const RasterStack& stack) {
  std::vector<BandId> bands;
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(stack.width) * stack.height *
               stack.planes.size());
  for (std::size_t i = 0; i < stack.names.size(); ++i) {
    const auto id = parse_band(stack.names[i]);
    if (!id)
      throw LoadError(LoadErrorKind::kBadFormat,
                      "unrecognized band name '" + stack.names[i] + "'");
    bands.push_back(*id);
    for (float v : stack.planes[i]) {
      if (std::isnan(v))
        throw LoadError(LoadErrorKind::kNanPayload,
                        "NaN in band " + stack.names[i]);
      data.push_back(v);
    }
  }
  try {
    return Scene(stack.width, stack.height, std::move(bands), std::move(data),
                 stack.geotransform, stack.crs, stack.level);
  } catch (const InvalidArgument& e) {
    throw LoadError(LoadErrorKind::kBadFormat, e.what());
  }
}

void write_flat(const Scene& scene, const std::filesystem::path& path) {
  write_flat_stack(to_stack(scene), path);
}

Scene read_flat(const std::filesystem::path& path) {
  return to_scene(read_flat_stack(path));
}

}  // namespace driftscan
