// SPDX-License-Identifier: Apache-2.0
#include "aobd/raster_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "aobd/errors.hpp"

namespace aobd {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& is) {
  std::array<char, sizeof(T)> bytes{};
  if (!is.read(bytes.data(), bytes.size())) throw DataError("IMG1: truncated stream");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void write_img1(std::ostream& os, const Image2D& img) {
  os.write("IMG1", 4);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(img.width()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(img.height()));
  for (double v : img) put_le<double>(os, v);
}

Image2D read_img1(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || std::memcmp(magic.data(), "IMG1", 4) != 0) {
    throw DataError("IMG1: bad magic");
  }
  const auto w = get_le<std::uint32_t>(is);
  const auto h = get_le<std::uint32_t>(is);
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) throw DataError("IMG1: invalid dimensions");
  std::vector<double> values(static_cast<std::size_t>(w) * h);
  for (double& v : values) v = get_le<double>(is);
  return Image2D(static_cast<int>(w), static_cast<int>(h), std::move(values));
}

void write_img1(const std::filesystem::path& path, const Image2D& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  write_img1(os, img);
  if (!os) throw DataError("write failed: " + path.string());
}

Image2D read_img1(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("missing file: " + path.string());
  return read_img1(is);
}

Image2D mask_to_image(const Mask2D& mask) {
  Image2D out(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1.0 : 0.0;
  return out;
}

Mask2D image_to_mask(const Image2D& img) {
  Mask2D out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[i] != 0.0 ? 1 : 0;
  return out;
}

Stretch parse_stretch(const std::string& name) {
  if (name == "linear") return Stretch::Linear;
  if (name == "sqrt") return Stretch::Sqrt;
  if (name == "dual") return Stretch::DualLinear;
  throw ConfigError("unknown stretch '" + name + "' (expected linear, sqrt or dual)");
}

Image2D apply_stretch(const Image2D& img, const StretchOptions& opts) {
  double lo = opts.lo;
  double hi = opts.hi;
  if (lo >= hi) {
    lo = min_value(img);
    hi = max_value(img);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  double split = opts.split > 0.0 ? opts.split : lo + 0.05 * (hi - lo);
  split = std::clamp(split, lo, hi);
  return map(img, [&](double v) {
    const double c = std::clamp(v, lo, hi);
    switch (opts.kind) {
      case Stretch::Linear:
        return (c - lo) / span;
      case Stretch::Sqrt:
        return std::sqrt((c - lo) / span);
      case Stretch::DualLinear:
        if (c <= split) return split > lo ? 0.5 * (c - lo) / (split - lo) : 0.0;
        return 0.5 + 0.5 * (c - split) / (hi - split);
    }
    return 0.0;
  });
}

void write_pgm16(const std::filesystem::path& path, const Image2D& img, const StretchOptions& opts) {
  const Image2D unit = apply_stretch(img, opts);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os << "P5\n" << img.width() << ' ' << img.height() << "\n65535\n";
  // Row 0 of the image is displayed at the bottom (astronomical convention).
  for (int y = img.height() - 1; y >= 0; --y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto v = static_cast<std::uint16_t>(std::lround(unit(x, y) * 65535.0));
      const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
      os.write(bytes, 2);
    }
  }
  if (!os) throw DataError("write failed: " + path.string());
}

}  // namespace aobd
