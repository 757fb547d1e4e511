// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "aobd/image.hpp"

namespace aobd {

enum class Axis { X = 1, Y = 2 };

/// Forward difference with periodic wrap: out(x) = v(x + e_axis) - v(x).
Image2D finite_diff(const Image2D& img, Axis axis);
/// Adjoint of finite_diff: out(x) = g(x - e_axis) - g(x).
Image2D finite_diff_adjoint(const Image2D& grad, Axis axis);

/// k x k median with replicate padding. k must be odd and >= 1.
Image2D median_filter(const Image2D& img, int k);

/// 1 where img >= threshold, 0 elsewhere.
Mask2D threshold_mask(const Image2D& img, double threshold);

/// Dilation by a (2r+1) x (2r+1) square.
Mask2D dilate(const Mask2D& mask, int radius);

/// Bicubic (Keys, a = -0.5) translation: out(x, y) = in(x - dx, y - dy).
/// Samples falling outside the grid read as 0.
Image2D shift_image(const Image2D& img, double dx, double dy);

/// 8-connected component of `mask` containing `seed`; empty if mask[seed] == 0.
Mask2D connected_component_of(const Mask2D& mask, Pixel seed);

}  // namespace aobd
