// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "aobd/image.hpp"

namespace aobd {

/// Real 2-D FFT of a fixed grid size (FFTW r2c / c2r, unnormalized).
/// Plans are created under a process-wide lock; execution is thread-safe per instance.
class Fft2D {
 public:
  Fft2D(int width, int height);
  ~Fft2D();
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;
  Fft2D(Fft2D&&) noexcept;
  Fft2D& operator=(Fft2D&&) noexcept;

  int width() const { return width_; }
  int height() const { return height_; }
  /// Number of complex coefficients: height * (width / 2 + 1).
  std::size_t spectrum_size() const;

  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  /// Inverse transform including the 1/(w*h) normalization.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  struct Impl;
  int width_;
  int height_;
  std::unique_ptr<Impl> impl_;
};

/// How the fixed operand of a Convolver is stored on the grid.
enum class Origin {
  Corner,  ///< operand origin at pixel (0, 0): plain circular convolution
  Center,  ///< origin at (floor(w/2), floor(h/2)): PSF / kernel convention
};

/// Periodic convolution with a fixed operand, and its adjoint.
///
/// `apply(x)` returns `fixed ⊛ x` where `x` is stored with `variable_origin`
/// and the fixed operand with `fixed_origin`. Output pixels are indexed like an
/// image (corner origin) unless both operands are centered.
class Convolver {
 public:
  Convolver(const Image2D& fixed, Origin fixed_origin, Origin variable_origin);

  Image2D apply(const Image2D& x) const;
  /// Adjoint of apply: <apply(x), r> == <x, adjoint(r)>.
  Image2D adjoint(const Image2D& r) const;

  int width() const { return width_; }
  int height() const { return height_; }

 private:
  int width_;
  int height_;
  Origin variable_origin_;
  mutable Fft2D fft_;
  std::vector<std::complex<double>> spectrum_;
  mutable std::vector<std::complex<double>> work_;
};

/// Periodic convolution of `img` with a centered kernel of the same size.
/// Throws std::invalid_argument on size mismatch or non-finite input.
Image2D convolve(const Image2D& img, const Image2D& kernel);

/// Move a centered kernel's origin to pixel (0, 0) (inverse of centering).
Image2D uncenter(const Image2D& kernel);
/// Move an origin-(0,0) kernel to the grid center.
Image2D center(const Image2D& kernel);

}  // namespace aobd
