#pragma once

// Per-channel centered 2D spectra of raster images.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <vector>

#include "fqc/error.hpp"

namespace fqc {

/// H x W x C image, interleaved (h, w, c) storage, nominal range [0,1].
struct RasterImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> pixels;

  RasterImage() = default;
  RasterImage(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
      : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

  double& at(std::size_t h, std::size_t w, std::size_t c) { return pixels[(h * width + w) * channels + c]; }
  double at(std::size_t h, std::size_t w, std::size_t c) const {
    return pixels[(h * width + w) * channels + c];
  }

  bool same_shape(const RasterImage& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }

  void validate() const {
    if (height < 2 || width < 2) fail(Errc::invalid_input, "image must be at least 2x2");
    if (channels != 1 && channels != 3) fail(Errc::invalid_input, "image must have 1 or 3 channels");
    if (pixels.size() != height * width * channels) fail(Errc::dimension, "pixel buffer size mismatch");
    for (double p : pixels)
      if (!std::isfinite(p)) fail(Errc::invalid_input, "image contains a non-finite pixel");
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

/// Planar (c, u, v) complex coefficients with DC at (height/2, width/2).
struct SpectralImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<std::complex<double>> coeffs;

  SpectralImage() = default;
  SpectralImage(std::size_t h, std::size_t w, std::size_t c) : height(h), width(w), channels(c), coeffs(h * w * c) {}

  std::size_t plane() const noexcept { return height * width; }

  std::complex<double>& at(std::size_t u, std::size_t v, std::size_t c) {
    return coeffs[c * plane() + u * width + v];
  }
  const std::complex<double>& at(std::size_t u, std::size_t v, std::size_t c) const {
    return coeffs[c * plane() + u * width + v];
  }

  void validate() const {
    if (height < 2 || width < 2) fail(Errc::invalid_input, "spectrum must be at least 2x2");
    if (channels == 0) fail(Errc::invalid_input, "spectrum has no channels");
    if (coeffs.size() != plane() * channels) fail(Errc::dimension, "coefficient buffer size mismatch");
  }
};

namespace detail {

// FFTW's planner is not thread-safe; execution with new arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

class Dft2d {
 public:
  Dft2d(std::size_t h, std::size_t w, int sign) : n_(h * w), buf_(fftw_alloc_complex(h * w)) {
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), buf_.get(), buf_.get(), sign,
                             FFTW_ESTIMATE);
    if (plan_ == nullptr) fail(Errc::invalid_input, "failed to plan 2D FFT");
  }
  Dft2d(const Dft2d&) = delete;
  Dft2d& operator=(const Dft2d&) = delete;
  ~Dft2d() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }

  std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(buf_.get()); }
  void execute() { fftw_execute(plan_); }
  std::size_t size() const noexcept { return n_; }

 private:
  std::size_t n_;
  FftwBuffer buf_;
  fftw_plan plan_ = nullptr;
};

// Position of unshifted frequency index i once index 0 is moved to n/2.
inline std::size_t centered_index(std::size_t i, std::size_t n) { return (i + n / 2) % n; }

}  // namespace detail

/// Per-channel 2D DFT with the zero frequency moved to the center.
inline SpectralImage forward_spectrum(const RasterImage& img) {
  img.validate();
  const std::size_t H = img.height, W = img.width, C = img.channels;
  SpectralImage out(H, W, C);
  detail::Dft2d dft(H, W, FFTW_FORWARD);
  auto* buf = dft.data();
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) buf[h * W + w] = {img.at(h, w, c), 0.0};
    dft.execute();
    for (std::size_t u = 0; u < H; ++u)
      for (std::size_t v = 0; v < W; ++v)
        out.at(detail::centered_index(u, H), detail::centered_index(v, W), c) = buf[u * W + v];
  }
  return out;
}

/// Complex spatial field of the inverse transform, planar (c, h, w), before
/// any real-part projection or clamping.
inline std::vector<std::complex<double>> inverse_field(const SpectralImage& spec) {
  spec.validate();
  const std::size_t H = spec.height, W = spec.width, C = spec.channels;
  std::vector<std::complex<double>> field(H * W * C);
  detail::Dft2d dft(H, W, FFTW_BACKWARD);
  auto* buf = dft.data();
  const double norm = 1.0 / static_cast<double>(H * W);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t u = 0; u < H; ++u)
      for (std::size_t v = 0; v < W; ++v)
        buf[u * W + v] = spec.at(detail::centered_index(u, H), detail::centered_index(v, W), c);
    dft.execute();
    for (std::size_t i = 0; i < H * W; ++i) field[c * H * W + i] = buf[i] * norm;
  }
  return field;
}

/// Inverse of forward_spectrum; keeps the real part and clamps to [0,1].
inline RasterImage inverse_spectrum(const SpectralImage& spec) {
  const auto field = inverse_field(spec);
  const std::size_t H = spec.height, W = spec.width, C = spec.channels;
  RasterImage img(H, W, C);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w)
        img.at(h, w, c) = std::clamp(field[c * H * W + h * W + w].real(), 0.0, 1.0);
  return img;
}

}  // namespace fqc
