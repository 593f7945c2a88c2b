#pragma once

// Test-only helpers and independent oracles. Nothing here calls into the
// code paths it is used to check.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "fqc/spectrum.hpp"

namespace fqc::test {

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "fqc") {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
             std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    std::filesystem::create_directories(path_);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline RasterImage random_image(std::mt19937_64& rng, std::size_t h, std::size_t w, std::size_t c, double lo = 0.0,
                                double hi = 1.0) {
  std::uniform_real_distribution<double> U(lo, hi);
  RasterImage img(h, w, c);
  for (auto& p : img.pixels) p = U(rng);
  return img;
}

/// Direct DFT evaluated at each centered index: frequency (U - H/2, V - W/2).
inline SpectralImage brute_force_spectrum(const RasterImage& img) {
  const long H = static_cast<long>(img.height), W = static_cast<long>(img.width);
  SpectralImage out(img.height, img.width, img.channels);
  for (std::size_t c = 0; c < img.channels; ++c) {
    for (long U = 0; U < H; ++U) {
      for (long V = 0; V < W; ++V) {
        const long ku = U - H / 2, kv = V - W / 2;
        std::complex<double> acc = 0.0;
        for (long h = 0; h < H; ++h) {
          for (long w = 0; w < W; ++w) {
            const long a = ((ku * h) % H + H) % H;
            const long b = ((kv * w) % W + W) % W;
            const double phase = -2.0 * std::numbers::pi *
                                 (static_cast<double>(a) / static_cast<double>(H) +
                                  static_cast<double>(b) / static_cast<double>(W));
            acc += img.at(static_cast<std::size_t>(h), static_cast<std::size_t>(w), c) * std::polar(1.0, phase);
          }
        }
        out.at(static_cast<std::size_t>(U), static_cast<std::size_t>(V), c) = acc;
      }
    }
  }
  return out;
}

/// Direct inverse DFT of a centered spectrum; returns the complex field (c, h, w).
inline std::vector<std::complex<double>> brute_force_inverse(const SpectralImage& spec) {
  const long H = static_cast<long>(spec.height), W = static_cast<long>(spec.width);
  std::vector<std::complex<double>> out(spec.coeffs.size());
  for (std::size_t c = 0; c < spec.channels; ++c) {
    for (long h = 0; h < H; ++h) {
      for (long w = 0; w < W; ++w) {
        std::complex<double> acc = 0.0;
        for (long U = 0; U < H; ++U) {
          for (long V = 0; V < W; ++V) {
            const long ku = U - H / 2, kv = V - W / 2;
            const long a = ((ku * h) % H + H) % H;
            const long b = ((kv * w) % W + W) % W;
            const double phase = 2.0 * std::numbers::pi *
                                 (static_cast<double>(a) / static_cast<double>(H) +
                                  static_cast<double>(b) / static_cast<double>(W));
            acc += spec.at(static_cast<std::size_t>(U), static_cast<std::size_t>(V), c) * std::polar(1.0, phase);
          }
        }
        out[c * spec.plane() + static_cast<std::size_t>(h * W + w)] = acc / static_cast<double>(H * W);
      }
    }
  }
  return out;
}

/// Mask predicate evaluated directly from its definition.
inline bool in_low_band(long u, long v, long H, long W, long r) {
  const long ch = H / 2, cw = W / 2;
  return u >= ch - r && u < ch + r && v >= cw - r && v < cw + r;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const SpectralImage& a, const SpectralImage& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.coeffs.size(); ++i) m = std::max(m, std::abs(a.coeffs[i] - b.coeffs[i]));
  return m;
}

}  // namespace fqc::test
