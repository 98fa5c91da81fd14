#include "driftscan/geotiff.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace driftscan {
namespace {

enum Tag : std::uint16_t {
  kImageWidth = 256,
  kImageLength = 257,
  kBitsPerSample = 258,
  kCompression = 259,
  kPhotometric = 262,
  kStripOffsets = 273,
  kSamplesPerPixel = 277,
  kRowsPerStrip = 278,
  kStripByteCounts = 279,
  kPlanarConfig = 284,
  kPredictor = 317,
  kTileWidth = 322,
  kTileLength = 323,
  kTileOffsets = 324,
  kTileByteCounts = 325,
  kSampleFormat = 339,
  kModelPixelScale = 33550,
  kModelTiepoint = 33922,
  kModelTransformation = 34264,
  kGeoKeyDirectory = 34735,
};

constexpr std::uint16_t kProjectedCsTypeKey = 3072;
constexpr std::uint16_t kGeographicTypeKey = 2048;

[[noreturn]] void fail(LoadErrorKind kind, const std::string& what) {
  throw LoadError(kind, what);
}

int type_size(std::uint16_t type) {
  switch (type) {
    case 1: case 2: case 6: case 7: return 1;
    case 3: case 8: return 2;
    case 4: case 9: case 11: return 4;
    case 5: case 10: case 12: return 8;
    default: return 0;
  }
}

class TiffBytes {
 public:
  explicit TiffBytes(std::string bytes) : bytes_(std::move(bytes)) {
    if (bytes_.size() < 8) fail(LoadErrorKind::kBadFormat, "file too short for TIFF");
    if (bytes_.compare(0, 2, "II") == 0) {
      little_ = true;
    } else if (bytes_.compare(0, 2, "MM") == 0) {
      little_ = false;
    } else {
      fail(LoadErrorKind::kBadFormat, "not a TIFF file");
    }
    if (u16(2) != 42) fail(LoadErrorKind::kUnsupported, "BigTIFF or bad TIFF version");
  }

  std::uint64_t uint(std::size_t off, int n) const {
    if (off + static_cast<std::size_t>(n) > bytes_.size())
      fail(LoadErrorKind::kBadLength, "TIFF offset past end of file");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      const auto b = static_cast<unsigned char>(bytes_[off + i]);
      v |= static_cast<std::uint64_t>(b) << (8 * (little_ ? i : n - 1 - i));
    }
    return v;
  }
  std::uint16_t u16(std::size_t off) const { return static_cast<std::uint16_t>(uint(off, 2)); }
  std::uint32_t u32(std::size_t off) const { return static_cast<std::uint32_t>(uint(off, 4)); }
  bool little() const { return little_; }
  const std::string& raw() const { return bytes_; }

 private:
  std::string bytes_;
  bool little_ = true;
};

struct Entry {
  std::uint16_t type = 0;
  std::uint32_t count = 0;
  std::size_t offset = 0;  // absolute position of the value bytes
};

class Ifd {
 public:
  Ifd(const TiffBytes& tiff, std::size_t offset) : tiff_(tiff) {
    const std::uint16_t n = tiff.u16(offset);
    for (std::uint16_t i = 0; i < n; ++i) {
      const std::size_t e = offset + 2 + 12u * i;
      Entry entry;
      const std::uint16_t tag = tiff.u16(e);
      entry.type = tiff.u16(e + 2);
      entry.count = tiff.u32(e + 4);
      const int size = type_size(entry.type);
      if (size == 0) continue;  // unknown type: skip the entry
      const std::uint64_t bytes = static_cast<std::uint64_t>(size) * entry.count;
      entry.offset = bytes <= 4 ? e + 8 : tiff.u32(e + 8);
      if (entry.offset + bytes > tiff.raw().size())
        fail(LoadErrorKind::kBadLength, "TIFF tag " + std::to_string(tag) +
                                            " points past end of file");
      entries_[tag] = entry;
    }
  }

  bool has(std::uint16_t tag) const { return entries_.count(tag) != 0; }

  std::vector<double> values(std::uint16_t tag) const {
    const auto it = entries_.find(tag);
    if (it == entries_.end()) return {};
    const Entry& e = it->second;
    std::vector<double> out;
    out.reserve(e.count);
    for (std::uint32_t i = 0; i < e.count; ++i) {
      switch (e.type) {
        case 1: case 7: out.push_back(tiff_.uint(e.offset + i, 1)); break;
        case 6: out.push_back(static_cast<std::int8_t>(tiff_.uint(e.offset + i, 1))); break;
        case 3: out.push_back(tiff_.u16(e.offset + 2u * i)); break;
        case 8: out.push_back(static_cast<std::int16_t>(tiff_.u16(e.offset + 2u * i))); break;
        case 4: out.push_back(tiff_.u32(e.offset + 4u * i)); break;
        case 9: out.push_back(static_cast<std::int32_t>(tiff_.u32(e.offset + 4u * i))); break;
        case 11: out.push_back(std::bit_cast<float>(tiff_.u32(e.offset + 4u * i))); break;
        case 12: out.push_back(std::bit_cast<double>(tiff_.uint(e.offset + 8u * i, 8))); break;
        case 5: case 10: {
          const double num = tiff_.u32(e.offset + 8u * i);
          const double den = tiff_.u32(e.offset + 8u * i + 4);
          out.push_back(den == 0 ? 0.0 : num / den);
          break;
        }
        default: break;
      }
    }
    return out;
  }

  std::uint64_t scalar(std::uint16_t tag, std::uint64_t fallback) const {
    const auto v = values(tag);
    return v.empty() ? fallback : static_cast<std::uint64_t>(v.front());
  }

 private:
  const TiffBytes& tiff_;
  std::map<std::uint16_t, Entry> entries_;
};

std::string inflate_chunk(const std::string& src, std::size_t expected) {
  std::string out(expected, '\0');
  uLongf out_len = static_cast<uLongf>(expected);
  const int rc = uncompress(reinterpret_cast<Bytef*>(out.data()), &out_len,
                            reinterpret_cast<const Bytef*>(src.data()),
                            static_cast<uLong>(src.size()));
  // A chunk may legitimately decode to fewer bytes than the nominal size only
  // if the writer truncated padding; anything else is corrupt.
  if (rc != Z_OK && rc != Z_BUF_ERROR)
    fail(LoadErrorKind::kBadFormat, "DEFLATE stream is corrupt");
  if (out_len < expected) fail(LoadErrorKind::kBadLength, "DEFLATE chunk too short");
  return out;
}

int sample_bytes(TiffSampleType t) {
  switch (t) {
    case TiffSampleType::kUInt8: case TiffSampleType::kInt8: return 1;
    case TiffSampleType::kUInt16: case TiffSampleType::kInt16: return 2;
    case TiffSampleType::kFloat32: return 4;
  }
  return 0;
}

TiffSampleType sample_type_from(int bits, int format) {
  if (format == 3 && bits == 32) return TiffSampleType::kFloat32;
  if (format == 1 && bits == 8) return TiffSampleType::kUInt8;
  if (format == 2 && bits == 8) return TiffSampleType::kInt8;
  if (format == 1 && bits == 16) return TiffSampleType::kUInt16;
  if (format == 2 && bits == 16) return TiffSampleType::kInt16;
  fail(LoadErrorKind::kUnsupported, "unsupported sample layout: " +
                                        std::to_string(bits) + "-bit, format " +
                                        std::to_string(format));
}

// Reads sample `i` of a decoded chunk as float.
float decode_sample(const char* p, TiffSampleType t, bool little) {
  auto read = [&](int n) {
    std::uint32_t v = 0;
    for (int k = 0; k < n; ++k)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[k]))
           << (8 * (little ? k : n - 1 - k));
    return v;
  };
  switch (t) {
    case TiffSampleType::kUInt8: return static_cast<float>(read(1));
    case TiffSampleType::kInt8: return static_cast<float>(static_cast<std::int8_t>(read(1)));
    case TiffSampleType::kUInt16: return static_cast<float>(read(2));
    case TiffSampleType::kInt16: return static_cast<float>(static_cast<std::int16_t>(read(2)));
    case TiffSampleType::kFloat32: return std::bit_cast<float>(read(4));
  }
  return 0.0f;
}

// Undoes horizontal differencing in place over `rows` rows of `row_samples`
// samples with `stride` interleaved components.
void undo_predictor(std::string& buf, TiffSampleType t, bool little, int rows,
                    int row_pixels, int stride) {
  const int nb = sample_bytes(t);
  for (int r = 0; r < rows; ++r) {
    char* row = buf.data() + static_cast<std::size_t>(r) * row_pixels * stride * nb;
    for (int i = stride; i < row_pixels * stride; ++i) {
      char* cur = row + static_cast<std::size_t>(i) * nb;
      const char* prev = cur - static_cast<std::ptrdiff_t>(stride) * nb;
      if (nb == 1) {
        cur[0] = static_cast<char>(static_cast<unsigned char>(cur[0]) +
                                   static_cast<unsigned char>(prev[0]));
      } else {
        const int lo = little ? 0 : 1;
        const int hi = 1 - lo;
        const unsigned a = static_cast<unsigned char>(cur[lo]) |
                           (static_cast<unsigned char>(cur[hi]) << 8);
        const unsigned b = static_cast<unsigned char>(prev[lo]) |
                           (static_cast<unsigned char>(prev[hi]) << 8);
        const unsigned s = (a + b) & 0xFFFFu;
        cur[lo] = static_cast<char>(s & 0xFF);
        cur[hi] = static_cast<char>(s >> 8);
      }
    }
  }
}

std::optional<GeoTransform> read_georeference(const Ifd& ifd) {
  if (ifd.has(kModelTransformation)) {
    const auto m = ifd.values(kModelTransformation);
    if (m.size() != 16)
      fail(LoadErrorKind::kBadGeoreference, "ModelTransformation must hold 16 values");
    GeoTransform gt;
    gt.c = {m[3], m[0], m[1], m[7], m[4], m[5]};
    return gt;
  }
  const bool has_scale = ifd.has(kModelPixelScale);
  const bool has_tie = ifd.has(kModelTiepoint);
  if (!has_scale && !has_tie) return std::nullopt;
  if (has_scale != has_tie)
    fail(LoadErrorKind::kBadGeoreference, "pixel scale and tiepoint must both be present");
  const auto scale = ifd.values(kModelPixelScale);
  const auto tie = ifd.values(kModelTiepoint);
  if (scale.size() < 2 || tie.size() < 6 || scale[0] == 0.0 || scale[1] == 0.0)
    fail(LoadErrorKind::kBadGeoreference, "malformed pixel scale or tiepoint");
  GeoTransform gt;
  gt.c = {tie[3] - tie[0] * scale[0], scale[0], 0.0,
          tie[4] + tie[1] * scale[1], 0.0, -scale[1]};
  for (double c : gt.c)
    if (!std::isfinite(c)) fail(LoadErrorKind::kBadGeoreference, "non-finite georeference");
  return gt;
}

std::string read_crs(const Ifd& ifd) {
  const auto keys = ifd.values(kGeoKeyDirectory);
  if (keys.size() < 4) return {};
  const auto n = static_cast<std::size_t>(keys[3]);
  if (keys.size() < 4 + 4 * n)
    fail(LoadErrorKind::kBadGeoreference, "truncated GeoKeyDirectory");
  std::string geographic;
  for (std::size_t k = 0; k < n; ++k) {
    const auto* key = &keys[4 + 4 * k];
    if (key[1] != 0) continue;  // value stored in another tag
    const auto code = static_cast<long>(key[3]);
    if (code == 0 || code == 32767) continue;
    const std::string epsg = "EPSG:" + std::to_string(code);
    if (key[0] == kProjectedCsTypeKey) return epsg;
    if (key[0] == kGeographicTypeKey) geographic = epsg;
  }
  return geographic;
}

}  // namespace

TiffImage read_tiff(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(LoadErrorKind::kIo, "cannot open " + path.string());
  TiffBytes tiff(std::string((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>()));
  const Ifd ifd(tiff, tiff.u32(4));

  TiffImage img;
  const auto width = ifd.scalar(kImageWidth, 0);
  const auto height = ifd.scalar(kImageLength, 0);
  if (width == 0 || height == 0 || width > (1u << 30) || height > (1u << 30))
    fail(LoadErrorKind::kBadFormat, "missing or invalid image extent");
  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  const int spp = static_cast<int>(ifd.scalar(kSamplesPerPixel, 1));
  if (spp < 1) fail(LoadErrorKind::kBadFormat, "invalid SamplesPerPixel");

  auto bits = ifd.values(kBitsPerSample);
  auto formats = ifd.values(kSampleFormat);
  if (bits.empty()) bits.assign(1, 1.0);
  if (formats.empty()) formats.assign(1, 1.0);
  for (const auto* v : {&bits, &formats})
    for (double x : *v)
      if (x != v->front())
        fail(LoadErrorKind::kInconsistentDimensions, "mixed per-band sample layouts");
  if ((bits.size() != 1 && bits.size() != static_cast<std::size_t>(spp)))
    fail(LoadErrorKind::kInconsistentDimensions, "BitsPerSample count mismatch");
  img.sample_type = sample_type_from(static_cast<int>(bits.front()),
                                     static_cast<int>(formats.front()));
  const int nb = sample_bytes(img.sample_type);

  const auto compression = ifd.scalar(kCompression, 1);
  if (compression != 1 && compression != 8 && compression != 32946)
    fail(LoadErrorKind::kUnsupported, "compression " + std::to_string(compression));
  const auto predictor = ifd.scalar(kPredictor, 1);
  if (predictor != 1 &&
      !(predictor == 2 && img.sample_type != TiffSampleType::kFloat32))
    fail(LoadErrorKind::kUnsupported, "predictor " + std::to_string(predictor));
  const bool planar = ifd.scalar(kPlanarConfig, 1) == 2;

  const bool tiled = ifd.has(kTileOffsets);
  int chunk_w, chunk_h, across, down;
  std::vector<double> offsets, counts;
  if (tiled) {
    chunk_w = static_cast<int>(ifd.scalar(kTileWidth, 0));
    chunk_h = static_cast<int>(ifd.scalar(kTileLength, 0));
    if (chunk_w <= 0 || chunk_h <= 0) fail(LoadErrorKind::kBadFormat, "invalid tile size");
    offsets = ifd.values(kTileOffsets);
    counts = ifd.values(kTileByteCounts);
  } else {
    chunk_w = img.width;
    chunk_h = static_cast<int>(
        std::min<std::uint64_t>(ifd.scalar(kRowsPerStrip, height), height));
    if (chunk_h <= 0) fail(LoadErrorKind::kBadFormat, "invalid RowsPerStrip");
    offsets = ifd.values(kStripOffsets);
    counts = ifd.values(kStripByteCounts);
  }
  across = (img.width + chunk_w - 1) / chunk_w;
  down = (img.height + chunk_h - 1) / chunk_h;
  const std::size_t per_plane = static_cast<std::size_t>(across) * down;
  const std::size_t expected_chunks = planar ? per_plane * spp : per_plane;
  if (offsets.size() != expected_chunks || counts.size() != expected_chunks)
    fail(LoadErrorKind::kInconsistentDimensions,
         "expected " + std::to_string(expected_chunks) + " data chunks, found " +
             std::to_string(offsets.size()));

  const std::size_t plane_size = static_cast<std::size_t>(img.width) * img.height;
  img.planes.assign(static_cast<std::size_t>(spp), std::vector<float>(plane_size));
  const int comps = planar ? 1 : spp;

  for (std::size_t c = 0; c < expected_chunks; ++c) {
    const std::size_t plane0 = planar ? c / per_plane : 0;
    const std::size_t pos = planar ? c % per_plane : c;
    const int cx = static_cast<int>(pos % across) * chunk_w;
    const int cy = static_cast<int>(pos / across) * chunk_h;
    // Strips at the bottom hold only the remaining rows; tiles are always full.
    const int rows = tiled ? chunk_h : std::min(chunk_h, img.height - cy);
    const std::size_t raw_size =
        static_cast<std::size_t>(rows) * chunk_w * comps * nb;

    const auto off = static_cast<std::size_t>(offsets[c]);
    const auto len = static_cast<std::size_t>(counts[c]);
    if (off + len > tiff.raw().size())
      fail(LoadErrorKind::kBadLength, "data chunk past end of file");
    std::string chunk = tiff.raw().substr(off, len);
    if (compression != 1) {
      chunk = inflate_chunk(chunk, raw_size);
    } else if (chunk.size() < raw_size) {
      fail(LoadErrorKind::kBadLength, "uncompressed chunk too short");
    }
    if (predictor == 2)
      undo_predictor(chunk, img.sample_type, tiff.little(), rows, chunk_w, comps);

    for (int r = 0; r < rows; ++r) {
      const int y = cy + r;
      if (y >= img.height) break;
      for (int col = 0; col < chunk_w; ++col) {
        const int x = cx + col;
        if (x >= img.width) break;
        const std::size_t dst = static_cast<std::size_t>(y) * img.width + x;
        for (int k = 0; k < comps; ++k) {
          const std::size_t src =
              ((static_cast<std::size_t>(r) * chunk_w + col) * comps + k) * nb;
          img.planes[plane0 + k][dst] =
              decode_sample(chunk.data() + src, img.sample_type, tiff.little());
        }
      }
    }
  }

  img.geotransform = read_georeference(ifd);
  img.crs = read_crs(ifd);
  return img;
}

namespace {

class TiffWriter {
 public:
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const std::string& b) { out_ += b; }
  void pad() {
    if (out_.size() % 2) out_.push_back('\0');
  }
  std::size_t pos() const { return out_.size(); }
  std::string& str() { return out_; }
  void patch_u32(std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_[at + i] = static_cast<char>(v >> (8 * i));
  }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>(v >> (8 * i)));
  }
  std::string out_;
};

std::string encode_sample(float v, TiffSampleType t) {
  std::string s;
  auto put = [&](std::uint32_t bits, int n) {
    for (int i = 0; i < n; ++i) s.push_back(static_cast<char>(bits >> (8 * i)));
  };
  switch (t) {
    case TiffSampleType::kUInt8: put(static_cast<std::uint8_t>(v), 1); break;
    case TiffSampleType::kInt8: put(static_cast<std::uint8_t>(static_cast<std::int8_t>(v)), 1); break;
    case TiffSampleType::kUInt16: put(static_cast<std::uint16_t>(v), 2); break;
    case TiffSampleType::kInt16: put(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)), 2); break;
    case TiffSampleType::kFloat32: put(std::bit_cast<std::uint32_t>(v), 4); break;
  }
  return s;
}

std::string deflate_chunk(const std::string& raw) {
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::string out(len, '\0');
  if (compress2(reinterpret_cast<Bytef*>(out.data()), &len,
                reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), Z_DEFAULT_COMPRESSION) != Z_OK)
    throw Error("DEFLATE compression failed");
  out.resize(len);
  return out;
}

// Applies horizontal differencing (inverse of undo_predictor), little-endian.
void apply_predictor(std::string& buf, int nb, int rows, int row_pixels, int stride) {
  for (int r = 0; r < rows; ++r) {
    char* row = buf.data() + static_cast<std::size_t>(r) * row_pixels * stride * nb;
    for (int i = row_pixels * stride - 1; i >= stride; --i) {
      char* cur = row + static_cast<std::size_t>(i) * nb;
      const char* prev = cur - static_cast<std::ptrdiff_t>(stride) * nb;
      if (nb == 1) {
        cur[0] = static_cast<char>(static_cast<unsigned char>(cur[0]) -
                                   static_cast<unsigned char>(prev[0]));
      } else {
        const unsigned a = static_cast<unsigned char>(cur[0]) |
                           (static_cast<unsigned char>(cur[1]) << 8);
        const unsigned b = static_cast<unsigned char>(prev[0]) |
                           (static_cast<unsigned char>(prev[1]) << 8);
        const unsigned d = (a - b) & 0xFFFFu;
        cur[0] = static_cast<char>(d & 0xFF);
        cur[1] = static_cast<char>(d >> 8);
      }
    }
  }
}

}  // namespace

void write_tiff(const TiffImage& image, const std::filesystem::path& path,
                const TiffWriteOptions& options) {
  const int spp = static_cast<int>(image.planes.size());
  if (spp < 1 || image.width <= 0 || image.height <= 0)
    throw InvalidArgument("cannot write empty TIFF");
  const std::size_t plane_size = static_cast<std::size_t>(image.width) * image.height;
  for (const auto& p : image.planes)
    if (p.size() != plane_size) throw InvalidArgument("TIFF plane has wrong size");
  if (options.tiled && (options.tile_size <= 0 || options.tile_size % 16))
    throw InvalidArgument("tile size must be a positive multiple of 16");
  const bool use_predictor =
      options.horizontal_predictor && image.sample_type != TiffSampleType::kFloat32;

  const int nb = sample_bytes(image.sample_type);
  const int chunk_w = options.tiled ? options.tile_size : image.width;
  const int chunk_h = options.tiled ? options.tile_size
                                    : std::max(1, std::min(options.rows_per_strip, image.height));
  const int across = (image.width + chunk_w - 1) / chunk_w;
  const int down = (image.height + chunk_h - 1) / chunk_h;
  const int comps = options.planar_separate ? 1 : spp;
  const int plane_groups = options.planar_separate ? spp : 1;

  TiffWriter w;
  w.str() = "II";
  w.u16(42);
  w.u32(0);  // IFD offset, patched below

  std::vector<std::uint32_t> offsets, counts;
  for (int g = 0; g < plane_groups; ++g) {
    for (int ty = 0; ty < down; ++ty) {
      for (int tx = 0; tx < across; ++tx) {
        const int cy = ty * chunk_h;
        const int cx = tx * chunk_w;
        const int rows = options.tiled ? chunk_h : std::min(chunk_h, image.height - cy);
        std::string raw;
        raw.reserve(static_cast<std::size_t>(rows) * chunk_w * comps * nb);
        for (int r = 0; r < rows; ++r) {
          for (int col = 0; col < chunk_w; ++col) {
            const int x = cx + col;
            const int y = cy + r;
            for (int k = 0; k < comps; ++k) {
              const auto& plane = image.planes[static_cast<std::size_t>(g + k)];
              const float v = (x < image.width && y < image.height)
                                  ? plane[static_cast<std::size_t>(y) * image.width + x]
                                  : 0.0f;
              raw += encode_sample(v, image.sample_type);
            }
          }
        }
        if (use_predictor) apply_predictor(raw, nb, rows, chunk_w, comps);
        if (options.deflate) raw = deflate_chunk(raw);
        w.pad();
        offsets.push_back(static_cast<std::uint32_t>(w.pos()));
        counts.push_back(static_cast<std::uint32_t>(raw.size()));
        w.bytes(raw);
      }
    }
  }

  // Out-of-line tag payloads are appended after the image data.
  struct OutEntry {
    std::uint16_t tag, type;
    std::uint32_t count;
    std::string payload;  // little-endian value bytes
  };
  std::vector<OutEntry> entries;
  auto shorts = [](std::vector<std::uint16_t> v) {
    std::string s;
    for (auto x : v) { s.push_back(static_cast<char>(x)); s.push_back(static_cast<char>(x >> 8)); }
    return s;
  };
  auto longs = [](const std::vector<std::uint32_t>& v) {
    std::string s;
    for (auto x : v)
      for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>(x >> (8 * i)));
    return s;
  };
  auto doubles = [](const std::vector<double>& v) {
    std::string s;
    for (double d : v) {
      const auto bits = std::bit_cast<std::uint64_t>(d);
      for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>(bits >> (8 * i)));
    }
    return s;
  };
  const auto u16n = [&](std::uint16_t tag, std::vector<std::uint16_t> v) {
    const auto n = static_cast<std::uint32_t>(v.size());
    entries.push_back({tag, 3, n, shorts(std::move(v))});
  };
  const auto u32n = [&](std::uint16_t tag, const std::vector<std::uint32_t>& v) {
    entries.push_back({tag, 4, static_cast<std::uint32_t>(v.size()), longs(v)});
  };

  int bits = nb * 8;
  int format = image.sample_type == TiffSampleType::kFloat32 ? 3
               : (image.sample_type == TiffSampleType::kInt8 ||
                  image.sample_type == TiffSampleType::kInt16)
                   ? 2
                   : 1;
  u32n(kImageWidth, {static_cast<std::uint32_t>(image.width)});
  u32n(kImageLength, {static_cast<std::uint32_t>(image.height)});
  u16n(kBitsPerSample, std::vector<std::uint16_t>(static_cast<std::size_t>(spp),
                                                  static_cast<std::uint16_t>(bits)));
  u16n(kCompression, {static_cast<std::uint16_t>(options.deflate ? 8 : 1)});
  u16n(kPhotometric, {1});
  if (!options.tiled) u32n(kStripOffsets, offsets);
  u16n(kSamplesPerPixel, {static_cast<std::uint16_t>(spp)});
  if (!options.tiled) {
    u32n(kRowsPerStrip, {static_cast<std::uint32_t>(chunk_h)});
    u32n(kStripByteCounts, counts);
  }
  u16n(kPlanarConfig, {static_cast<std::uint16_t>(options.planar_separate ? 2 : 1)});
  if (use_predictor) u16n(kPredictor, {2});
  if (options.tiled) {
    u32n(kTileWidth, {static_cast<std::uint32_t>(chunk_w)});
    u32n(kTileLength, {static_cast<std::uint32_t>(chunk_h)});
    u32n(kTileOffsets, offsets);
    u32n(kTileByteCounts, counts);
  }
  u16n(kSampleFormat, std::vector<std::uint16_t>(static_cast<std::size_t>(spp),
                                                 static_cast<std::uint16_t>(format)));
  if (image.geotransform) {
    const auto& c = image.geotransform->c;
    if (c[2] == 0.0 && c[4] == 0.0) {
      entries.push_back({kModelPixelScale, 12, 3, doubles({c[1], -c[5], 0.0})});
      entries.push_back({kModelTiepoint, 12, 6, doubles({0, 0, 0, c[0], c[3], 0})});
    } else {
      entries.push_back({kModelTransformation, 12, 16,
                         doubles({c[1], c[2], 0, c[0], c[4], c[5], 0, c[3],
                                  0, 0, 0, 0, 0, 0, 0, 1})});
    }
    std::vector<std::uint16_t> keys = {1, 1, 0, 0};
    if (image.crs.rfind("EPSG:", 0) == 0) {
      const auto code = static_cast<std::uint16_t>(std::stoi(image.crs.substr(5)));
      const bool geographic = code == 4326;
      keys[3] = 1;
      keys.insert(keys.end(),
                  {geographic ? kGeographicTypeKey : kProjectedCsTypeKey, 0, 1, code});
    }
    u16n(kGeoKeyDirectory, keys);
  }

  std::vector<std::uint32_t> payload_at(entries.size(), 0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].payload.size() > 4) {
      w.pad();
      payload_at[i] = static_cast<std::uint32_t>(w.pos());
      w.bytes(entries[i].payload);
    }
  }
  w.pad();
  w.patch_u32(4, static_cast<std::uint32_t>(w.pos()));
  w.u16(static_cast<std::uint16_t>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    w.u16(e.tag);
    w.u16(e.type);
    w.u32(e.count);
    if (e.payload.size() > 4) {
      w.u32(payload_at[i]);
    } else {
      std::string inline_bytes = e.payload;
      inline_bytes.resize(4, '\0');
      w.bytes(inline_bytes);
    }
  }
  w.u32(0);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError(LoadErrorKind::kIo, "cannot open " + path.string());
  out.write(w.str().data(), static_cast<std::streamsize>(w.str().size()));
  if (!out) throw LoadError(LoadErrorKind::kIo, "write failed: " + path.string());
}

namespace {

// Canonical 13-band Sentinel-2 order; B10 marked by nullopt.
const std::vector<std::optional<BandId>>& thirteen_band_order() {
  static const std::vector<std::optional<BandId>> order = {
      BandId::B1, BandId::B2, BandId::B3, BandId::B4, BandId::B5,
      BandId::B6, BandId::B7, BandId::B8, BandId::B8A, BandId::B9,
      std::nullopt, BandId::B11, BandId::B12};
  return order;
}

std::vector<std::optional<BandId>> band_order_for(const std::filesystem::path& path,
                                                  std::size_t planes) {
  auto sidecar = path;
  sidecar += ".bands";
  if (std::filesystem::exists(sidecar)) {
    std::ifstream in(sidecar);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (char& ch : text)
      if (ch == ',') ch = ' ';
    std::istringstream words(text);
    std::vector<std::optional<BandId>> order;
    for (std::string w; words >> w;) {
      const auto id = parse_band(w);
      if (!id && w != "B10" && w != "b10")
        fail(LoadErrorKind::kBadFormat, "sidecar names unknown band '" + w + "'");
      order.push_back(id);
    }
    if (order.size() != planes)
      fail(LoadErrorKind::kInconsistentDimensions,
           "sidecar lists " + std::to_string(order.size()) + " bands but file has " +
               std::to_string(planes));
    return order;
  }
  if (planes == kBandCount) return {kAllBands.begin(), kAllBands.end()};
  if (planes == thirteen_band_order().size()) return thirteen_band_order();
  if (planes < kBandCount)
    fail(LoadErrorKind::kMissingBand, "file has " + std::to_string(planes) +
                                          " bands and no band-order sidecar");
  fail(LoadErrorKind::kInconsistentDimensions,
       "cannot infer band order for " + std::to_string(planes) + " bands");
}

}  // namespace

Scene load_geotiff(const std::filesystem::path& path, ProcessingLevel level) {
  TiffImage img = read_tiff(path);
  if (!img.geotransform)
    fail(LoadErrorKind::kBadGeoreference, "no georeferencing tags in " + path.string());
  const auto order = band_order_for(path, img.planes.size());

  std::array<int, kBandCount> source{};
  source.fill(-1);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!order[i]) continue;
    auto& s = source[static_cast<std::size_t>(*order[i])];
    if (s >= 0)
      fail(LoadErrorKind::kBadFormat, "duplicate band " + std::string(band_name(*order[i])));
    s = static_cast<int>(i);
  }
  for (BandId id : kAllBands)
    if (source[static_cast<std::size_t>(id)] < 0)
      fail(LoadErrorKind::kMissingBand, "band " + std::string(band_name(id)) +
                                            " not found in " + path.string());

  const bool integer = img.sample_type != TiffSampleType::kFloat32;
  const std::size_t plane_size = static_cast<std::size_t>(img.width) * img.height;
  std::vector<float> data;
  data.reserve(plane_size * kBandCount);
  for (BandId id : kAllBands) {
    const auto& plane = img.planes[static_cast<std::size_t>(source[static_cast<std::size_t>(id)])];
    for (float v : plane) {
      if (std::isnan(v))
        fail(LoadErrorKind::kNanPayload, "NaN in band " + std::string(band_name(id)));
      data.push_back(integer ? static_cast<float>(static_cast<double>(v) / 10000.0) : v);
    }
  }
  return Scene(img.width, img.height, {kAllBands.begin(), kAllBands.end()},
               std::move(data), *img.geotransform, img.crs, level);
}

}  // namespace driftscan
