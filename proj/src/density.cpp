// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#include "countaug/density.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "countaug/error.hpp"
#include "countaug/image.hpp"

namespace countaug {

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset) {
  return static_cast<std::uint32_t>(in[offset]) | static_cast<std::uint32_t>(in[offset + 1]) << 8 |
         static_cast<std::uint32_t>(in[offset + 2]) << 16 |
         static_cast<std::uint32_t>(in[offset + 3]) << 24;
}

// Adds one unit-mass kernel centred at `p` into `accum`.
void splat_kernel(std::vector<double>& accum, std::uint32_t width, std::uint32_t height, Point p,
                  double sigma) {
  const double radius = kKernelTruncation * sigma;
  const double radius_sq = radius * radius;
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  const auto lo_x = static_cast<std::int64_t>(std::max(0.0, std::ceil(p.x - radius)));
  const auto hi_x = static_cast<std::int64_t>(std::min<double>(width - 1, std::floor(p.x + radius)));
  const auto lo_y = static_cast<std::int64_t>(std::max(0.0, std::ceil(p.y - radius)));
  const auto hi_y = static_cast<std::int64_t>(std::min<double>(height - 1, std::floor(p.y + radius)));

  struct Cell {
    std::size_t index;
    double weight;
  };
  std::vector<Cell> cells;
  double total = 0.0;
  for (std::int64_t y = lo_y; y <= hi_y; ++y) {
    const double dy = static_cast<double>(y) - p.y;
    for (std::int64_t x = lo_x; x <= hi_x; ++x) {
      const double dx = static_cast<double>(x) - p.x;
      const double d2 = dx * dx + dy * dy;
      if (d2 > radius_sq) continue;
      const double w = std::exp(-d2 * inv_two_var);
      if (w == 0.0) continue;
      cells.push_back({static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x), w});
      total += w;
    }
  }
  if (cells.empty()) {
    // Kernel narrower than the pixel grid: all mass goes to the nearest pixel.
    const auto x = std::min<std::int64_t>(std::llround(p.x), width - 1);
    const auto y = std::min<std::int64_t>(std::llround(p.y), height - 1);
    accum[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)] += 1.0;
    return;
  }
  for (const auto& cell : cells) accum[cell.index] += cell.weight / total;
}

}  // namespace

DensityMap render_density(std::span<const Point> points, std::uint32_t width,
                          std::uint32_t height, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ArgumentError("render_density: sigma must be positive");
  }
  if (width == 0 || height == 0) throw ArgumentError("render_density: zero-area grid");
  std::vector<double> accum(static_cast<std::size_t>(width) * height, 0.0);
  for (const auto& p : points) {
    if (!(p.x >= 0 && p.x < width && p.y >= 0 && p.y < height)) {
      throw ArgumentError("render_density: point outside the grid");
    }
    splat_kernel(accum, width, height, p, sigma);
  }
  DensityMap map(width, height);
  map.source_point_count = points.size();
  std::transform(accum.begin(), accum.end(), map.values.begin(),
                 [](double v) { return static_cast<float>(v); });
  return map;
}

DensityMap render_density(const ImageRecord& record, double sigma) {
  return render_density(record.points, record.width, record.height, sigma);
}

double density_count(const DensityMap& map) {
  return std::accumulate(map.values.begin(), map.values.end(), 0.0,
                         [](double acc, float v) { return acc + static_cast<double>(v); });
}

Bytes encode_dmap(const DensityMap& map) {
  if (map.values.size() != static_cast<std::size_t>(map.width) * map.height) {
    throw ArgumentError("encode_dmap: value count does not match dimensions");
  }
  Bytes out(kDmapHeaderSize + 4 * map.values.size());
  std::memcpy(out.data(), kDmapMagic, sizeof(kDmapMagic));
  out.resize(sizeof(kDmapMagic));
  put_u32(out, map.width);
  put_u32(out, map.height);
  for (const float v : map.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

DensityMap decode_dmap(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kDmapMagic) ||
      std::memcmp(bytes.data(), kDmapMagic, sizeof(kDmapMagic)) != 0) {
    throw FormatError("DMAPv1: bad magic");
  }
  if (bytes.size() < kDmapHeaderSize) throw FormatError("DMAPv1: truncated header");
  const std::uint32_t width = get_u32(bytes, 8);
  const std::uint32_t height = get_u32(bytes, 12);
  const std::uint64_t cells = static_cast<std::uint64_t>(width) * height;
  if (cells > (std::numeric_limits<std::size_t>::max() - kDmapHeaderSize) / 4) {
    throw FormatError("DMAPv1: dimension overflow");
  }
  const std::uint64_t expected = kDmapHeaderSize + 4 * cells;
  if (bytes.size() < expected) throw FormatError("DMAPv1: truncated payload");
  if (bytes.size() > expected) throw FormatError("DMAPv1: trailing bytes after payload");
  DensityMap map(width, height);
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    map.values[i] = std::bit_cast<float>(get_u32(bytes, kDmapHeaderSize + 4 * i));
  }
  return map;
}

void save_dmap(const DensityMap& map, const std::filesystem::path& path) {
  write_file(path, encode_dmap(map));
}

DensityMap load_dmap(const std::filesystem::path& path) { return decode_dmap(read_file(path)); }

std::vector<Point> extract_peaks(const DensityMap& map, double min_height, double min_separation) {
  struct Candidate {
    float value;
    std::size_t index;
  };
  std::vector<Candidate> candidates;
  const auto w = static_cast<std::int64_t>(map.width);
  const auto h = static_cast<std::int64_t>(map.height);
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const float v = map.values[static_cast<std::size_t>(y * w + x)];
      if (!(v >= min_height)) continue;
      bool dominates_all = true;
      bool exceeds_one = false;
      for (std::int64_t dy = -1; dy <= 1 && dominates_all; ++dy) {
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const std::int64_t nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const float n = map.values[static_cast<std::size_t>(ny * w + nx)];
          if (n > v) {
            dominates_all = false;
            break;
          }
          if (n < v) exceeds_one = true;
        }
      }
      if (dominates_all && exceeds_one) {
        candidates.push_back({v, static_cast<std::size_t>(y * w + x)});
      }
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.value > b.value; });

  std::vector<Point> accepted;
  const double sep_sq = min_separation * min_separation;
  for (const auto& c : candidates) {
    const Point p{static_cast<double>(c.index % map.width), static_cast<double>(c.index / map.width)};
    const bool suppressed = std::any_of(accepted.begin(), accepted.end(), [&](const Point& q) {
      const double dx = p.x - q.x, dy = p.y - q.y;
      return dx * dx + dy * dy <= sep_sq;
    });
    if (!suppressed) accepted.push_back(p);
  }
  return accepted;
}

void export_density_png(const DensityMap& map, const std::filesystem::path& path) {
  if (map.values.empty()) throw ArgumentError("export_density_png: empty map");
  const auto [lo_it, hi_it] = std::minmax_element(map.values.begin(), map.values.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<std::uint16_t> scaled(map.values.size(), 0);
  if (hi > lo) {
    for (std::size_t i = 0; i < scaled.size(); ++i) {
      scaled[i] = static_cast<std::uint16_t>(std::lround((map.values[i] - lo) / (hi - lo) * 65535.0));
    }
  }
  write_gray16_png(path, map.width, map.height, scaled);
}

}  // namespace countaug
