// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#include "countaug/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include "countaug/error.hpp"

namespace countaug {

RgbImage::RgbImage(std::uint32_t w, std::uint32_t h, Rgb fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    std::copy(fill.begin(), fill.end(), pixels.begin() + static_cast<std::ptrdiff_t>(i));
  }
}

Rgb RgbImage::at(std::uint32_t x, std::uint32_t y) const {
  const std::size_t offset = (static_cast<std::size_t>(y) * width + x) * 3;
  return {pixels[offset], pixels[offset + 1], pixels[offset + 2]};
}

void RgbImage::set(std::uint32_t x, std::uint32_t y, Rgb color) {
  const std::size_t offset = (static_cast<std::size_t>(y) * width + x) * 3;
  pixels[offset] = color[0];
  pixels[offset + 1] = color[1];
  pixels[offset + 2] = color[2];
}

namespace {

struct PngMemoryReader {
  std::span<const std::uint8_t> data;
  std::size_t offset = 0;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* reader = static_cast<PngMemoryReader*>(png_get_io_ptr(png));
  if (reader->offset + count > reader->data.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, reader->data.data() + reader->offset, count);
  reader->offset += count;
}

void png_write_to_memory(png_structp png, png_bytep in, png_size_t count) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + count);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_throw(png_structp png, png_const_charp message) {
  auto* error = static_cast<std::string*>(png_get_error_ptr(png));
  *error = message;
  png_longjmp(png, 1);
}

void png_warn_ignore(png_structp, png_const_charp) {}

}  // namespace

Bytes encode_png(const RgbImage& image) {
  if (image.width == 0 || image.height == 0) throw ArgumentError("encode_png: empty image");
  Bytes out;
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_throw, png_warn_ignore);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("encode_png: libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("encode_png: " + error);
  }
  png_set_write_fn(png, &out, png_write_to_memory, png_flush_noop);
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::uint32_t y = 0; y < image.height; ++y) {
    png_write_row(png, image.pixels.data() + static_cast<std::size_t>(y) * image.width * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

namespace {

// The libpng calls live in functions whose locals are trivially destructible,
// so a longjmp out of libpng never skips a destructor.
bool png_read_header(png_structp png, png_infop info, PngMemoryReader* reader) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_read_fn(png, reader, png_read_from_memory);
  png_read_info(png, info);
  const auto color_type = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  return true;
}

bool png_read_rows(png_structp png, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  return true;
}

}  // namespace

RgbImage decode_png(std::span<const std::uint8_t> data) {
  if (data.size() < 8 || png_sig_cmp(data.data(), 0, 8) != 0) {
    throw FormatError("decode_png: missing PNG signature");
  }
  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_throw, png_warn_ignore);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("decode_png: libpng initialisation failed");
  }
  PngMemoryReader reader{data, 0};
  if (!png_read_header(png, info, &reader)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("decode_png: " + error);
  }
  RgbImage image;
  image.width = png_get_image_width(png, info);
  image.height = png_get_image_height(png, info);
  if (png_get_rowbytes(png, info) != static_cast<png_size_t>(image.width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("decode_png: unsupported pixel layout");
  }
  image.pixels.resize(static_cast<std::size_t>(image.width) * image.height * 3);
  std::vector<png_bytep> rows(image.height);
  for (std::uint32_t y = 0; y < image.height; ++y) {
    rows[y] = image.pixels.data() + static_cast<std::size_t>(y) * image.width * 3;
  }
  const bool ok = png_read_rows(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) throw FormatError("decode_png: " + error);
  return image;
}

void write_gray16_png(const std::filesystem::path& path, std::uint32_t width,
                      std::uint32_t height, std::span<const std::uint16_t> values) {
  if (values.size() != static_cast<std::size_t>(width) * height) {
    throw ArgumentError("write_gray16_png: value count does not match dimensions");
  }
  Bytes out;
  std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 2);
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_throw, png_warn_ignore);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("write_gray16_png: libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("write_gray16_png: " + error);
  }
  png_set_write_fn(png, &out, png_write_to_memory, png_flush_noop);
  png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::uint32_t y = 0; y < height; ++y) {
    for (std::uint32_t x = 0; x < width; ++x) {
      const std::uint16_t v = values[static_cast<std::size_t>(y) * width + x];
      row[2 * x] = static_cast<std::uint8_t>(v >> 8);  // PNG samples are big-endian
      row[2 * x + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  write_file(path, out);
}

Rgb hsv_to_rgb(double hue, double saturation, double value) {
  hue = std::fmod(hue, 360.0);
  if (hue < 0) hue += 360.0;
  const double c = value * saturation;
  const double h = hue / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(h, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = value - c;
  auto to_byte = [m](double channel) {
    return static_cast<std::uint8_t>(std::clamp(std::lround((channel + m) * 255.0), 0L, 255L));
  };
  return {to_byte(r), to_byte(g), to_byte(b)};
}

double rgb_hue(Rgb color) {
  const double r = color[0], g = color[1], b = color[2];
  const double hi = std::max({r, g, b});
  const double lo = std::min({r, g, b});
  const double delta = hi - lo;
  if (delta == 0) return 0.0;
  double hue;
  if (hi == r) {
    hue = 60.0 * std::fmod((g - b) / delta, 6.0);
  } else if (hi == g) {
    hue = 60.0 * ((b - r) / delta + 2.0);
  } else {
    hue = 60.0 * ((r - g) / delta + 4.0);
  }
  if (hue < 0) hue += 360.0;
  if (hue >= 360.0) hue -= 360.0;
  return hue;
}

}  // namespace countaug
