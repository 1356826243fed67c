#pragma once

#include <png.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "swm/core.hpp"

namespace swm {

struct ImageU8 {
  int width = 0, height = 0;
  std::vector<std::array<std::uint8_t, 3>> pixels;

  static ImageU8 filled(int w, int h, std::array<std::uint8_t, 3> c = {0, 0, 0}) {
    ImageU8 img;
    img.width = w;
    img.height = h;
    img.pixels.assign(std::size_t(w) * h, c);
    return img;
  }
  std::array<std::uint8_t, 3>& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }
  const std::array<std::uint8_t, 3>& at(int x, int y) const {
    return pixels[std::size_t(y) * width + x];
  }
  bool operator==(const ImageU8&) const = default;
};

/// Depth in meters; NaN marks invalid pixels.
struct DepthMap {
  int width = 0, height = 0;
  std::vector<float> values;

  static DepthMap filled(int w, int h, float v) {
    DepthMap d;
    d.width = w;
    d.height = h;
    d.values.assign(std::size_t(w) * h, v);
    return d;
  }
  float& at(int x, int y) { return values[std::size_t(y) * width + x]; }
  float at(int x, int y) const { return values[std::size_t(y) * width + x]; }
};

struct BoolMask {
  int width = 0, height = 0;
  std::vector<std::uint8_t> values;

  static BoolMask filled(int w, int h, bool v) {
    BoolMask m;
    m.width = w;
    m.height = h;
    m.values.assign(std::size_t(w) * h, v ? 1 : 0);
    return m;
  }
  void set(int x, int y, bool v) { values[std::size_t(y) * width + x] = v ? 1 : 0; }
  bool at(int x, int y) const { return values[std::size_t(y) * width + x] != 0; }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : values) n += v != 0;
    return n;
  }
};

namespace detail {
struct PngCloser {
  std::FILE* f = nullptr;
  ~PngCloser() {
    if (f) std::fclose(f);
  }
};
}  // namespace detail

inline void write_png(const std::filesystem::path& path, const ImageU8& img) {
  detail::PngCloser file{std::fopen(path.string().c_str(), "wb")};
  if (!file.f) throw ValidationError("cannot open for write: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ValidationError("png write failed: " + path.string());
  }
  png_init_io(png, file.f);
  png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(&img.pixels[std::size_t(y) * img.width][0]);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline ImageU8 read_png(const std::filesystem::path& path) {
  detail::PngCloser file{std::fopen(path.string().c_str(), "rb")};
  if (!file.f) throw ValidationError("cannot open: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError("png read failed: " + path.string());
  }
  png_init_io(png, file.f);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  ImageU8 img;
  img.width = int(png_get_image_width(png, info));
  img.height = int(png_get_image_height(png, info));
  img.pixels.resize(std::size_t(img.width) * img.height);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = &img.pixels[std::size_t(y) * img.width][0];
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline void write_mask_png(const std::filesystem::path& path, const BoolMask& mask) {
  ImageU8 img = ImageU8::filled(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    const std::uint8_t v = mask.values[i] ? 255 : 0;
    img.pixels[i] = {v, v, v};
  }
  write_png(path, img);
}

inline BoolMask read_mask_png(const std::filesystem::path& path) {
  const ImageU8 img = read_png(path);
  BoolMask m = BoolMask::filled(img.width, img.height, false);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) m.values[i] = img.pixels[i][0] >= 128;
  return m;
}

// Depth interchange: one ASCII header line "SWMD <width> <height>\n"
// followed by row-major little-endian IEEE-754 float32. Bit-exact round trip.

inline void write_depth(const std::filesystem::path& path, const DepthMap& depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for write: " + path.string());
  out << "SWMD " << depth.width << " " << depth.height << "\n";
  for (float v : depth.values) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    const std::uint8_t raw[4] = {std::uint8_t(bits), std::uint8_t(bits >> 8),
                                 std::uint8_t(bits >> 16), std::uint8_t(bits >> 24)};
    out.write(reinterpret_cast<const char*>(raw), 4);
  }
  if (!out) throw ValidationError("depth write failed: " + path.string());
}

inline DepthMap read_depth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open: " + path.string());
  std::string magic;
  int w = 0, h = 0;
  in >> magic >> w >> h;
  char nl = 0;
  in.get(nl);
  if (magic != "SWMD" || nl != '\n' || w <= 0 || h <= 0)
    throw ValidationError("bad depth header: " + path.string());
  DepthMap d;
  d.width = w;
  d.height = h;
  d.values.resize(std::size_t(w) * h);
  std::vector<std::uint8_t> raw(d.values.size() * 4);
  in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
  if (!in) throw ValidationError("depth payload truncated: " + path.string());
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    const std::uint32_t bits = std::uint32_t(raw[4 * i]) | std::uint32_t(raw[4 * i + 1]) << 8 |
                               std::uint32_t(raw[4 * i + 2]) << 16 |
                               std::uint32_t(raw[4 * i + 3]) << 24;
    std::memcpy(&d.values[i], &bits, 4);
  }
  return d;
}

}  // namespace swm
