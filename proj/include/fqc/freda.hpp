#pragma once

// Frequency data augmentation: the low band of a real image spliced with the
// high band of its paired fake.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fqc/error.hpp"
#include "fqc/spectrum.hpp"

namespace fqc {

inline constexpr std::string_view kAugmentationTag = "#freda";

inline std::string augmented_id(const std::string& source_id) {
  return source_id + std::string(kAugmentationTag);
}

/// Square low-pass window over a centered spectrum. Entry (u,v) is 1 iff
/// u in [H/2 - r, H/2 + r) and v in [W/2 - r, W/2 + r).
struct FrequencyMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t radius = 0;
  std::vector<std::uint8_t> entries;

  std::uint8_t at(std::size_t u, std::size_t v) const { return entries[u * width + v]; }

  std::size_t ones() const {
    return static_cast<std::size_t>(std::count(entries.begin(), entries.end(), std::uint8_t{1}));
  }
};

inline FrequencyMask build_mask(long long height, long long width, long long radius) {
  if (height < 2 || width < 2) fail(Errc::invalid_input, "mask must be at least 2x2");
  if (radius < 0) fail(Errc::invalid_input, "frequency threshold must be non-negative");
  FrequencyMask m{static_cast<std::size_t>(height), static_cast<std::size_t>(width),
                  static_cast<std::size_t>(radius),
                  std::vector<std::uint8_t>(static_cast<std::size_t>(height * width), 0)};
  const long long ch = height / 2, cw = width / 2;
  const long long u0 = std::max(0LL, ch - radius), u1 = std::min(height, ch + radius);
  const long long v0 = std::max(0LL, cw - radius), v1 = std::min(width, cw + radius);
  for (long long u = u0; u < u1; ++u)
    for (long long v = v0; v < v1; ++v) m.entries[static_cast<std::size_t>(u * width + v)] = 1;
  return m;
}

/// Default threshold: floor(min(H,W) / 16).
inline std::size_t default_radius(std::size_t height, std::size_t width) {
  return std::min(height, width) / 16;
}

/// Real coefficients where the mask is set, fake coefficients elsewhere.
inline SpectralImage splice(const SpectralImage& real, const SpectralImage& fake, const FrequencyMask& mask) {
  if (real.height != fake.height || real.width != fake.width || real.channels != fake.channels)
    fail(Errc::dimension, "spliced spectra differ in shape");
  if (mask.height != real.height || mask.width != real.width)
    fail(Errc::dimension, "mask shape does not match spectra");
  SpectralImage out(real.height, real.width, real.channels);
  for (std::size_t c = 0; c < real.channels; ++c)
    for (std::size_t u = 0; u < real.height; ++u)
      for (std::size_t v = 0; v < real.width; ++v)
        out.at(u, v, c) = mask.at(u, v) ? real.at(u, v, c) : fake.at(u, v, c);
  return out;
}

inline RasterImage freda(const RasterImage& fake, const RasterImage& real, std::size_t radius) {
  if (!fake.same_shape(real))
    fail(Errc::pairing, "fake and paired real differ in shape (" + std::to_string(fake.height) + "x" +
                            std::to_string(fake.width) + "x" + std::to_string(fake.channels) + " vs " +
                            std::to_string(real.height) + "x" + std::to_string(real.width) + "x" +
                            std::to_string(real.channels) + ")");
  const auto mask = build_mask(static_cast<long long>(fake.height), static_cast<long long>(fake.width),
                               static_cast<long long>(radius));
  return inverse_spectrum(splice(forward_spectrum(real), forward_spectrum(fake), mask));
}

/// Mean spectral magnitude in `bands` concentric square rings (Chebyshev
/// distance from DC), averaged over channels and normalized by H*W.
inline std::vector<double> spectral_band_features(const RasterImage& img, std::size_t bands) {
  if (bands == 0) fail(Errc::dimension, "band count must be positive");
  const auto spec = forward_spectrum(img);
  const std::size_t H = img.height, W = img.width;
  const std::size_t ch = H / 2, cw = W / 2;
  const std::size_t max_rho = std::max(std::max(ch, H - 1 - ch), std::max(cw, W - 1 - cw));
  std::vector<double> sum(bands, 0.0);
  std::vector<std::size_t> count(bands, 0);
  for (std::size_t u = 0; u < H; ++u) {
    for (std::size_t v = 0; v < W; ++v) {
      const std::size_t du = u > ch ? u - ch : ch - u;
      const std::size_t dv = v > cw ? v - cw : cw - v;
      const std::size_t band = std::max(du, dv) * bands / (max_rho + 1);
      for (std::size_t c = 0; c < img.channels; ++c) sum[band] += std::abs(spec.at(u, v, c));
      count[band] += img.channels;
    }
  }
  const double norm = static_cast<double>(H * W);
  for (std::size_t b = 0; b < bands; ++b) sum[b] = count[b] ? sum[b] / count[b] / norm : 0.0;
  return sum;
}

}  // namespace fqc
