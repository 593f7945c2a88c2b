#pragma once

// 8-bit raster I/O. PNG goes through libpng's simplified API; binary PGM/PPM
// (P5/P6, maxval 255) is handled directly. Pixels map linearly to [0,1].

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fqc/error.hpp"
#include "fqc/spectrum.hpp"

namespace fqc {

enum class RasterFormat { png, pnm };

inline RasterFormat format_for(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return RasterFormat::png;
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return RasterFormat::pnm;
  fail(Errc::io, "unsupported image extension '" + ext + "' for " + path.string());
}

inline std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline RasterImage from_bytes(const std::vector<std::uint8_t>& bytes, std::size_t h, std::size_t w,
                              std::size_t c) {
  RasterImage img(h, w, c);
  for (std::size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = bytes[i] / 255.0;
  return img;
}

inline std::vector<std::uint8_t> to_bytes(const RasterImage& img) {
  std::vector<std::uint8_t> out(img.pixels.size());
  std::transform(img.pixels.begin(), img.pixels.end(), out.begin(), quantize);
  return out;
}

namespace detail {

inline RasterImage read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    fail(Errc::io, "cannot read PNG " + path.string() + ": " + image.message);
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t c = color ? 3 : 1;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(Errc::io, "cannot decode PNG " + path.string() + ": " + msg);
  }
  return from_bytes(bytes, image.height, image.width, c);
}

inline void write_png(const std::filesystem::path& path, const RasterImage& img) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const auto bytes = to_bytes(img);
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr))
    fail(Errc::io, "cannot write PNG " + path.string() + ": " + image.message);
}

inline std::string pnm_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      tok.push_back(ch);
      break;
    }
  }
  while (in.get(ch) && !std::isspace(static_cast<unsigned char>(ch))) tok.push_back(ch);
  return tok;
}

inline RasterImage read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  const std::string magic = pnm_token(in);
  if (magic != "P5" && magic != "P6") fail(Errc::parse, path.string() + ": only binary P5/P6 supported");
  std::size_t w = 0, h = 0;
  int maxval = 0;
  try {
    w = std::stoul(pnm_token(in));
    h = std::stoul(pnm_token(in));
    maxval = std::stoi(pnm_token(in));
  } catch (const std::exception&) {
    fail(Errc::parse, path.string() + ": malformed PNM header");
  }
  if (maxval != 255) fail(Errc::parse, path.string() + ": maxval must be 255");
  const std::size_t c = magic == "P6" ? 3 : 1;
  std::vector<std::uint8_t> bytes(w * h * c);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) fail(Errc::parse, path.string() + ": truncated pixel data");
  return from_bytes(bytes, h, w, c);
}

inline void write_pnm(const std::filesystem::path& path, const RasterImage& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot write " + path.string());
  out << (img.channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
  const auto bytes = to_bytes(img);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::io, "short write to " + path.string());
}

}  // namespace detail

inline RasterImage read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(Errc::io, "image not found: " + path.string());
  return format_for(path) == RasterFormat::png ? detail::read_png(path) : detail::read_pnm(path);
}

inline void write_image(const std::filesystem::path& path, const RasterImage& img) {
  if (img.channels != 1 && img.channels != 3) fail(Errc::invalid_input, "can only encode 1 or 3 channels");
  if (format_for(path) == RasterFormat::png)
    detail::write_png(path, img);
  else
    detail::write_pnm(path, img);
}

}  // namespace fqc
