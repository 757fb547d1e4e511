// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "aobd/image.hpp"

namespace aobd {

/// IMG1 raster: "IMG1", u32 width, u32 height (little endian), then
/// width*height little-endian float64 values, row-major.
void write_img1(std::ostream& os, const Image2D& img);
Image2D read_img1(std::istream& is);
void write_img1(const std::filesystem::path& path, const Image2D& img);
Image2D read_img1(const std::filesystem::path& path);

/// Masks are stored as IMG1 with values 0.0 / 1.0.
Image2D mask_to_image(const Mask2D& mask);
Mask2D image_to_mask(const Image2D& img);

enum class Stretch { Linear, Sqrt, DualLinear };

Stretch parse_stretch(const std::string& name);

struct StretchOptions {
  Stretch kind = Stretch::Linear;
  /// Display range; when lo >= hi the image min / max are used.
  double lo = 0.0;
  double hi = 0.0;
  /// DualLinear: values below `split` fill the lower half of the output range,
  /// values above it the upper half. A non-positive split means 5% of hi.
  double split = 0.0;
};

/// Map intensities to [0, 1] with the requested stretch.
Image2D apply_stretch(const Image2D& img, const StretchOptions& opts);

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples); image row 0 is written last so it displays at the bottom.
void write_pgm16(const std::filesystem::path& path, const Image2D& img, const StretchOptions& opts);

}  // namespace aobd
