// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures for the unit and acceptance suites.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "countaug/dataset.hpp"
#include "countaug/util.hpp"

namespace countaug::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("countaug-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path write_fixture(const TempDir& dir, const std::string& name,
                                           const std::string& text) {
  const auto path = dir / name;
  write_text_file(path, text);
  return path;
}

// Uniform in-bounds points; every fourth one (when `border` is set) hugs an edge.
inline std::vector<Point> random_points(std::mt19937_64& rng, std::size_t count,
                                        std::uint32_t width, std::uint32_t height,
                                        bool border = false) {
  std::uniform_real_distribution<double> ux(0.0, static_cast<double>(width));
  std::uniform_real_distribution<double> uy(0.0, static_cast<double>(height));
  std::uniform_real_distribution<double> edge(0.0, 0.75);
  std::vector<Point> points;
  for (std::size_t i = 0; i < count; ++i) {
    Point p{ux(rng), uy(rng)};
    if (border && i % 4 == 0) {
      switch (i / 4 % 4) {
        case 0: p.x = edge(rng); break;
        case 1: p.x = std::nextafter(static_cast<double>(width), 0.0) - edge(rng); break;
        case 2: p.y = edge(rng); break;
        default: p.y = std::nextafter(static_cast<double>(height), 0.0) - edge(rng); break;
      }
      p.x = std::clamp(p.x, 0.0, std::nextafter(static_cast<double>(width), 0.0));
      p.y = std::clamp(p.y, 0.0, std::nextafter(static_cast<double>(height), 0.0));
    }
    points.push_back(p);
  }
  return points;
}

// Points with pairwise distance >= separation, by rejection sampling.
inline std::vector<Point> separated_points(std::mt19937_64& rng, std::size_t count,
                                           std::uint32_t width, std::uint32_t height,
                                           double separation) {
  std::uniform_real_distribution<double> ux(0.0, static_cast<double>(width));
  std::uniform_real_distribution<double> uy(0.0, static_cast<double>(height));
  std::vector<Point> points;
  while (points.size() < count) {
    const Point p{ux(rng), uy(rng)};
    bool ok = true;
    for (const auto& q : points) {
      if ((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y) < separation * separation) {
        ok = false;
        break;
      }
    }
    if (ok) points.push_back(p);
  }
  return points;
}

// Short captions drawn from a small vocabulary, so that near-duplicates occur.
inline std::string random_caption(std::mt19937_64& rng) {
  static const std::vector<std::string> counts{"a", "two", "several", "many", "a pile of", "a row of"};
  static const std::vector<std::string> objects{
      "cows",    "bisons", "sheep",   "apples", "oranges", "cups",  "pens",
      "keys",    "coins",  "shells",  "birds",  "cars",    "beads", "eggs"};
  static const std::vector<std::string> adjectives{"", "red ", "small ", "white ", "brown ", "shiny "};
  static const std::vector<std::string> places{
      "on a table", "in a field", "on the grass", "in a bowl", "on a shelf", "near a window", ""};
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  std::string caption = pick(counts) + " " + pick(adjectives) + pick(objects);
  const std::string place = pick(places);
  if (!place.empty()) caption += " " + place;
  return caption;
}

// Reference signed-hash n-gram embedding, written against the textbook FNV-1a
// constants and a regex tokenizer. Returns the dense unit vector in double.
inline std::vector<double> reference_embedding(const std::string& caption, std::size_t dim = 4096) {
  auto fnv = [](const std::string& s, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (const unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  };
  std::string lowered = caption;
  for (auto& c : lowered) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  std::vector<double> v(dim, 0.0);
  auto add = [&](const std::string& feature) {
    const double sign = (fnv(feature, 0x84222325cbf29ce4ULL) & 1U) ? -1.0 : 1.0;
    v[fnv(feature, 0xcbf29ce484222325ULL) % dim] += sign;
  };
  static const std::regex token_re("[a-z0-9\\x80-\\xff]+");
  for (std::sregex_iterator it(lowered.begin(), lowered.end(), token_re), end; it != end; ++it) {
    const std::string token = it->str();
    add("w:" + token);
    for (std::size_t i = 0; i + 3 <= token.size(); ++i) add("g:" + token.substr(i, 3));
  }
  double norm = 0.0;
  for (const double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

inline double dense_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

// Train-only dataset with random captions, a few points and one exemplar box per image.
inline CountingDataset caption_dataset(std::mt19937_64& rng, std::size_t count,
                                       const std::string& prefix = "img") {
  CountingDataset dataset;
  std::uniform_real_distribution<double> coord(4.0, 60.0);
  for (std::size_t i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "%s%05zu.jpg", prefix.c_str(), i);
    ImageRecord r;
    r.image_id = id;
    r.width = 64;
    r.height = 64;
    for (int k = 0; k < 3; ++k) r.points.push_back({coord(rng), coord(rng)});
    const double x = coord(rng), y = coord(rng);
    r.exemplar_boxes.push_back({x - 3.0, y - 3.0, x + 3.0, y + 3.0});
    r.split = Split::kTrain;
    r.caption = random_caption(rng);
    dataset.split_lists[static_cast<std::size_t>(Split::kTrain)].push_back(r.image_id);
    dataset.records.emplace(r.image_id, std::move(r));
  }
  return dataset;
}

}  // namespace countaug::testing
