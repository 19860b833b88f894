// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "countaug/dataset.hpp"
#include "countaug/util.hpp"

namespace countaug {

inline constexpr double kDefaultSigma = 2.0;
// Kernel support radius in units of sigma.
inline constexpr double kKernelTruncation = 4.0;

// Ground-truth density: non-negative row-major field whose mass equals the
// number of objects it was rendered from.
struct DensityMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<float> values;
  std::uint64_t source_point_count = 0;

  DensityMap() = default;
  DensityMap(std::uint32_t w, std::uint32_t h)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0f) {}

  float at(std::uint32_t x, std::uint32_t y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  float& at(std::uint32_t x, std::uint32_t y) {
    return values[static_cast<std::size_t>(y) * width + x];
  }
};

/// One isotropic Gaussian per point, truncated at kKernelTruncation * sigma
/// and renormalised so each kernel's in-image mass is exactly one. Pixel (x, y)
/// is sampled at integer coordinates. Throws ArgumentError for sigma <= 0 or
/// an empty grid.
DensityMap render_density(std::span<const Point> points, std::uint32_t width,
                          std::uint32_t height, double sigma = kDefaultSigma);

DensityMap render_density(const ImageRecord& record, double sigma = kDefaultSigma);

/// Sum of all cells, accumulated in double in row-major order.
double density_count(const DensityMap& map);

inline constexpr char kDmapMagic[8] = {'D', 'M', 'A', 'P', 'v', '1', '\0', '\0'};
inline constexpr std::size_t kDmapHeaderSize = 16;

// DMAPv1: 8-byte magic, u32 LE width, u32 LE height, width*height f32 LE row-major.
Bytes encode_dmap(const DensityMap& map);
/// Throws FormatError on bad magic, truncated payload or dimension overflow.
/// source_point_count is not stored and decodes as 0.
DensityMap decode_dmap(std::span<const std::uint8_t> bytes);

void save_dmap(const DensityMap& map, const std::filesystem::path& path);
DensityMap load_dmap(const std::filesystem::path& path);

/// Local maxima with value >= min_height, accepted greedily in descending
/// height (row-major tie-break); a maximum within min_separation (Euclidean)
/// of an accepted one is suppressed.
std::vector<Point> extract_peaks(const DensityMap& map, double min_height, double min_separation);

/// Min-max scaled 16-bit grayscale PNG for inspection only.
void export_density_png(const DensityMap& map, const std::filesystem::path& path);

}  // namespace countaug
