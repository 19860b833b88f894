// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "countaug/util.hpp"

namespace countaug {

using Rgb = std::array<std::uint8_t, 3>;

// 8-bit interleaved RGB raster, row-major.
struct RgbImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(std::uint32_t w, std::uint32_t h, Rgb fill = {0, 0, 0});

  Rgb at(std::uint32_t x, std::uint32_t y) const;
  void set(std::uint32_t x, std::uint32_t y, Rgb color);

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

Bytes encode_png(const RgbImage& image);
/// Any PNG color type is expanded to 8-bit RGB. Throws FormatError.
RgbImage decode_png(std::span<const std::uint8_t> png);

/// Writes a 16-bit grayscale PNG; `values` are row-major and already scaled to [0, 65535].
void write_gray16_png(const std::filesystem::path& path, std::uint32_t width,
                      std::uint32_t height, std::span<const std::uint16_t> values);

/// HSV (hue in degrees, s and v in [0,1]) to 8-bit RGB.
Rgb hsv_to_rgb(double hue, double saturation, double value);
/// Hue in degrees in [0, 360); 0 for achromatic pixels.
double rgb_hue(Rgb color);

}  // namespace countaug
