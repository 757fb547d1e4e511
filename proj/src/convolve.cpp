// SPDX-License-Identifier: Apache-2.0
#include "aobd/convolve.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace aobd {

namespace {
// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Fft2D::Impl {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  std::size_t nreal = 0;
  std::size_t nspec = 0;

  Impl(int w, int h) {
    nreal = static_cast<std::size_t>(w) * h;
    nspec = static_cast<std::size_t>(h) * (w / 2 + 1);
    std::lock_guard lock(planner_mutex());
    real = fftw_alloc_real(nreal);
    spec = fftw_alloc_complex(nspec);
    r2c = fftw_plan_dft_r2c_2d(h, w, real, spec, FFTW_ESTIMATE);
    c2r = fftw_plan_dft_c2r_2d(h, w, spec, real, FFTW_ESTIMATE);
    if (!r2c || !c2r) throw std::runtime_error("Fft2D: FFTW planning failed");
  }
  ~Impl() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(r2c);
    fftw_destroy_plan(c2r);
    fftw_free(real);
    fftw_free(spec);
  }
};

Fft2D::Fft2D(int width, int height)
    : width_(width), height_(height), impl_(std::make_unique<Impl>(width, height)) {}
Fft2D::~Fft2D() = default;
Fft2D::Fft2D(Fft2D&&) noexcept = default;
Fft2D& Fft2D::operator=(Fft2D&&) noexcept = default;

std::size_t Fft2D::spectrum_size() const { return impl_->nspec; }

void Fft2D::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  std::copy(in.begin(), in.end(), impl_->real);
  fftw_execute(impl_->r2c);
  auto* src = reinterpret_cast<const std::complex<double>*>(impl_->spec);
  std::copy(src, src + impl_->nspec, out.begin());
}

void Fft2D::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  std::copy(in.begin(), in.end(), reinterpret_cast<std::complex<double>*>(impl_->spec));
  fftw_execute(impl_->c2r);
  const double scale = 1.0 / static_cast<double>(impl_->nreal);
  std::transform(impl_->real, impl_->real + impl_->nreal, out.begin(),
                 [scale](double v) { return v * scale; });
}

Image2D uncenter(const Image2D& kernel) {
  const Pixel c = grid_center(kernel);
  return roll(kernel, -c.x, -c.y);
}

Image2D center(const Image2D& kernel) {
  const Pixel c = grid_center(kernel);
  return roll(kernel, c.x, c.y);
}

Convolver::Convolver(const Image2D& fixed, Origin fixed_origin, Origin variable_origin)
    : width_(fixed.width()),
      height_(fixed.height()),
      variable_origin_(variable_origin),
      fft_(fixed.width(), fixed.height()) {
  if (fixed_origin == Origin::Center && variable_origin == Origin::Center) {
    throw std::invalid_argument("Convolver: at most one operand may be centered");
  }
  if (!all_finite(fixed)) throw std::invalid_argument("Convolver: non-finite operand");
  spectrum_.resize(fft_.spectrum_size());
  work_.resize(fft_.spectrum_size());
  const Image2D base = fixed_origin == Origin::Center ? uncenter(fixed) : fixed;
  fft_.forward(base.values(), spectrum_);
}

Image2D Convolver::apply(const Image2D& x) const {
  if (x.width() != width_ || x.height() != height_) {
    throw std::invalid_argument("Convolver::apply: dimension mismatch");
  }
  if (variable_origin_ == Origin::Center) {
    fft_.forward(uncenter(x).values(), work_);
  } else {
    fft_.forward(x.values(), work_);
  }
  for (std::size_t i = 0; i < work_.size(); ++i) work_[i] *= spectrum_[i];
  Image2D out(width_, height_);
  fft_.inverse(work_, out.values());
  return out;
}

Image2D Convolver::adjoint(const Image2D& r) const {
  if (r.width() != width_ || r.height() != height_) {
    throw std::invalid_argument("Convolver::adjoint: dimension mismatch");
  }
  fft_.forward(r.values(), work_);
  for (std::size_t i = 0; i < work_.size(); ++i) work_[i] *= std::conj(spectrum_[i]);
  Image2D out(width_, height_);
  fft_.inverse(work_, out.values());
  return variable_origin_ == Origin::Center ? center(out) : out;
}

Image2D convolve(const Image2D& img, const Image2D& kernel) {
  require_same_shape(img, kernel, "convolve");
  if (!all_finite(img) || !all_finite(kernel)) {
    throw std::invalid_argument("convolve: non-finite input");
  }
  return Convolver(kernel, Origin::Center, Origin::Corner).apply(img);
}

}  // namespace aobd
