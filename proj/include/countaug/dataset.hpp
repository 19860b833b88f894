// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace countaug {

enum class Split { kTrain = 0, kVal = 1, kTest = 2 };

inline constexpr std::array<Split, 3> kAllSplits = {Split::kTrain, Split::kVal, Split::kTest};

std::string_view split_name(Split split);
std::optional<Split> parse_split(std::string_view name);

struct Point {
  double x = 0;
  double y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

// Axis-aligned exemplar box in pixel coordinates; x1 < x2 and y1 < y2.
struct Box {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;
  double area() const { return (x2 - x1) * (y2 - y1); }
  friend bool operator==(const Box&, const Box&) = default;
};

struct ImageRecord {
  std::string image_id;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<Point> points;
  std::vector<Box> exemplar_boxes;
  std::optional<Split> split;
  std::string caption;
  std::string category;

  std::size_t count() const { return points.size(); }
  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

using RecordMap = std::map<std::string, ImageRecord>;

// Immutable after loading; safe to share between threads.
struct CountingDataset {
  RecordMap records;
  std::array<std::vector<std::string>, 3> split_lists;

  const std::vector<std::string>& ids(Split split) const {
    return split_lists[static_cast<std::size_t>(split)];
  }
  const ImageRecord& record(const std::string& image_id) const;

  friend bool operator==(const CountingDataset&, const CountingDataset&) = default;
};

// Non-fatal findings collected while loading.
struct Diagnostics {
  std::size_t clamped_points = 0;
  std::vector<std::string> warnings;
};

enum class AnnotationSchema {
  kFsc147,   // points + box_examples_coordinates (4-corner polygons)
  kGeneric,  // points + boxes ([x1, y1, x2, y2]), optional inline width/height
};

std::optional<AnnotationSchema> parse_schema(std::string_view name);

/// Loads an annotation file keyed by image id.
///
/// Image dimensions come from `image_dims_source` (JSON map id -> {"width","height"}
/// or [width, height]); the generic schema may also carry "width"/"height" inline.
/// Out-of-bounds points are clamped into the image and tallied in `diagnostics`.
/// Throws IoError for unreadable or malformed files and ValidationError for
/// records with degenerate or out-of-bounds boxes or missing dimensions.
RecordMap load_annotations(const std::filesystem::path& annotation_file,
                           const std::optional<std::filesystem::path>& image_dims_source,
                           AnnotationSchema schema, Diagnostics* diagnostics = nullptr);

/// Same as load_annotations but from in-memory JSON text.
RecordMap parse_annotations(std::string_view annotation_json,
                            std::string_view image_dims_json, AnnotationSchema schema,
                            Diagnostics* diagnostics = nullptr);

/// Assigns splits from a JSON map split name -> id list.
/// Records not listed in any split are dropped with a warning.
CountingDataset load_splits(const std::filesystem::path& split_file, const RecordMap& records,
                            Diagnostics* diagnostics = nullptr);
CountingDataset assign_splits(std::string_view split_json, const RecordMap& records,
                              Diagnostics* diagnostics = nullptr);

/// Attaches captions from a JSON map id -> caption. Train records without a
/// caption fall back to "a photo of {category}".
CountingDataset attach_captions(CountingDataset dataset, const std::filesystem::path& caption_file,
                                Diagnostics* diagnostics = nullptr);
CountingDataset apply_captions(CountingDataset dataset, std::string_view caption_json,
                               Diagnostics* diagnostics = nullptr);

std::string fallback_caption(std::string_view category);

/// Canonical single-file form of a fully loaded dataset.
std::string serialize_dataset(const CountingDataset& dataset);
CountingDataset deserialize_dataset(std::string_view text);
void save_dataset(const CountingDataset& dataset, const std::filesystem::path& path);
CountingDataset load_dataset(const std::filesystem::path& path);

}  // namespace countaug
