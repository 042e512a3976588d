#pragma once

// 8-bit lossless image codecs (PPM/PGM and PNG) with [0,1] conversion,
// plus bilinear resizing. Values map via /255 on read and round-to-nearest
// on write.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tae/tensor.hpp"

namespace tae {

namespace detail {

inline std::string lower_ext(const std::filesystem::path& path) {
  std::string e = path.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

inline int pnm_next_token(std::istream& in) {
  // skips whitespace and '#' comments, returns a non-negative integer
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = -1;
  in >> v;
  if (!in || v < 0) throw std::runtime_error("malformed PNM header");
  return v;
}

struct RawImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;  // 1 or 3
  std::vector<std::uint8_t> pixels;  // interleaved rows
};

inline RawImage read_pnm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open image " + path.string());
  char magic[2] = {0, 0};
  f.read(magic, 2);
  if (magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw std::runtime_error("unsupported PNM magic in " + path.string());
  }
  RawImage img;
  img.channels = magic[1] == '6' ? 3 : 1;
  img.width = static_cast<std::size_t>(pnm_next_token(f));
  img.height = static_cast<std::size_t>(pnm_next_token(f));
  const int maxval = pnm_next_token(f);
  if (maxval != 255) throw std::runtime_error("only 8-bit PNM supported: " + path.string());
  f.get();  // single whitespace after header
  img.pixels.resize(img.width * img.height * img.channels);
  f.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!f) throw std::runtime_error("truncated PNM data in " + path.string());
  return img;
}

inline void write_pnm(const std::filesystem::path& path, const RawImage& img) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << (img.channels == 3 ? "P6" : "P5") << "\n" << img.width << " " << img.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!f) throw std::runtime_error("short write to " + path.string());
}

inline RawImage read_png(const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw std::runtime_error("cannot open image " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    std::fclose(fp);
    throw std::runtime_error("libpng init failed for " + path.string());
  }
  RawImage img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("failed to decode PNG " + path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  img.channels = 3;
  img.pixels.resize(img.width * img.height * 3);
  rows.resize(img.height);
  for (std::size_t y = 0; y < img.height; ++y) rows[y] = img.pixels.data() + y * img.width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

inline void write_png(const std::filesystem::path& path, const RawImage& img) {
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw std::runtime_error("libpng init failed for " + path.string());
  }
  std::vector<png_bytep> rows(img.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("failed to encode PNG " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = img.width * img.channels;
  for (std::size_t y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.pixels.data() + y * stride);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

inline RawImage read_raw(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm" || ext == ".pgm") return read_pnm(path);
  throw std::runtime_error("unsupported image format '" + ext + "' for " + path.string());
}

inline std::uint8_t to_byte(double v) {
  const double scaled = std::min(std::max(v, 0.0), 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::lround(scaled));
}

}  // namespace detail

inline bool is_image_file(const std::filesystem::path& path) {
  const std::string ext = detail::lower_ext(path);
  return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

// Decodes an 8-bit image into a 3xHxW tensor in [0,1] (grayscale inputs
// are replicated across channels).
inline Tensor read_image(const std::filesystem::path& path) {
  const detail::RawImage img = detail::read_raw(path);
  Tensor t = Tensor::zeros({3, img.height, img.width});
  double* p = t.data();
  const std::size_t hw = img.height * img.width;
  for (std::size_t i = 0; i < hw; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::uint8_t b = img.channels == 3 ? img.pixels[i * 3 + c] : img.pixels[i];
      p[c * hw + i] = static_cast<double>(b) / 255.0;
    }
  }
  return t;
}

// Image dimensions (width, height) without decoding pixel data.
inline std::pair<std::size_t, std::size_t> read_image_size(const std::filesystem::path& path) {
  const std::string ext = detail::lower_ext(path);
  if (ext == ".ppm" || ext == ".pgm") {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open image " + path.string());
    char magic[2];
    f.read(magic, 2);
    const std::size_t w = static_cast<std::size_t>(detail::pnm_next_token(f));
    const std::size_t h = static_cast<std::size_t>(detail::pnm_next_token(f));
    return {w, h};
  }
  if (ext == ".png") {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open image " + path.string());
    std::uint8_t hdr[24];
    f.read(reinterpret_cast<char*>(hdr), 24);
    if (!f || std::memcmp(hdr + 1, "PNG", 3) != 0) {
      throw std::runtime_error("not a PNG file: " + path.string());
    }
    auto be32 = [&](int off) {
      return (static_cast<std::size_t>(hdr[off]) << 24) | (static_cast<std::size_t>(hdr[off + 1]) << 16) |
             (static_cast<std::size_t>(hdr[off + 2]) << 8) | static_cast<std::size_t>(hdr[off + 3]);
    };
    return {be32(16), be32(20)};
  }
  throw std::runtime_error("unsupported image format for " + path.string());
}

// Writes a 3xHxW tensor as 8-bit RGB; values are clamped to [0,1] and
// rounded to the nearest level.
inline void write_image(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.extent(0) != 3) {
    throw std::invalid_argument("write_image: expected 3xHxW tensor");
  }
  detail::RawImage img;
  img.height = image.extent(1);
  img.width = image.extent(2);
  img.channels = 3;
  img.pixels.resize(img.width * img.height * 3);
  const double* p = image.data();
  const std::size_t hw = img.height * img.width;
  for (std::size_t i = 0; i < hw; ++i)
    for (std::size_t c = 0; c < 3; ++c) img.pixels[i * 3 + c] = detail::to_byte(p[c * hw + i]);
  const std::string ext = detail::lower_ext(path);
  if (ext == ".png") {
    detail::write_png(path, img);
  } else if (ext == ".ppm") {
    detail::write_pnm(path, img);
  } else {
    throw std::runtime_error("unsupported output format '" + ext + "' for " + path.string());
  }
}

// Writes a 1xHxW (or CxHxW, channel-averaged) map as an 8-bit grayscale image.
inline void write_gray_image(const std::filesystem::path& path, const Tensor& map) {
  if (map.rank() != 3) throw std::invalid_argument("write_gray_image: expected CHW tensor");
  detail::RawImage img;
  img.height = map.extent(1);
  img.width = map.extent(2);
  img.channels = 1;
  img.pixels.resize(img.width * img.height);
  const std::size_t c = map.extent(0), hw = img.height * img.width;
  const double* p = map.data();
  for (std::size_t i = 0; i < hw; ++i) {
    double v = 0.0;
    for (std::size_t ci = 0; ci < c; ++ci) v += p[ci * hw + i];
    img.pixels[i] = detail::to_byte(v / static_cast<double>(c));
  }
  const std::string ext = detail::lower_ext(path);
  if (ext == ".png") {
    detail::write_png(path, img);
  } else if (ext == ".pgm") {
    detail::write_pnm(path, img);
  } else {
    throw std::runtime_error("unsupported output format '" + ext + "' for " + path.string());
  }
}

// Bilinear resize of a CHW tensor.
inline Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w) {
  if (image.rank() != 3) throw std::invalid_argument("resize_bilinear: expected CHW tensor");
  if (out_h == 0 || out_w == 0) throw std::invalid_argument("resize_bilinear: empty output");
  const std::size_t c = image.extent(0), h = image.extent(1), w = image.extent(2);
  if (h == out_h && w == out_w) return image.clone();
  Tensor out = Tensor::zeros({c, out_h, out_w});
  const double sy = static_cast<double>(h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(w) / static_cast<double>(out_w);
  const double* src = image.data();
  double* dst = out.data();
  for (std::size_t y = 0; y < out_h; ++y) {
    const double fy = std::max(0.0, (static_cast<double>(y) + 0.5) * sy - 0.5);
    const std::size_t y0 = std::min(static_cast<std::size_t>(fy), h - 1);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = std::max(0.0, (static_cast<double>(x) + 0.5) * sx - 0.5);
      const std::size_t x0 = std::min(static_cast<std::size_t>(fx), w - 1);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t ci = 0; ci < c; ++ci) {
        const double* chan = src + ci * h * w;
        const double top = chan[y0 * w + x0] * (1.0 - wx) + chan[y0 * w + x1] * wx;
        const double bot = chan[y1 * w + x0] * (1.0 - wx) + chan[y1 * w + x1] * wx;
        dst[(ci * out_h + y) * out_w + x] = top * (1.0 - wy) + bot * wy;
      }
    }
  }
  return out;
}

inline Tensor flip_horizontal(const Tensor& image) {
  if (image.rank() != 3) throw std::invalid_argument("flip_horizontal: expected CHW tensor");
  const std::size_t c = image.extent(0), h = image.extent(1), w = image.extent(2);
  Tensor out = Tensor::zeros(image.shape());
  const double* src = image.data();
  double* dst = out.data();
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        dst[(ci * h + y) * w + x] = src[(ci * h + y) * w + (w - 1 - x)];
  return out;
}

}  // namespace tae
