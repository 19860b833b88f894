// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <set>

#include "countaug/dataset.hpp"
#include "countaug/error.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace countaug;
using countaug::testing::TempDir;
using countaug::testing::write_fixture;
using nlohmann::json;

namespace {

const char* kFscFixture = R"({
  "7.jpg": {
    "points": [[10.5, 20.25], [30.0, 40.0]],
    "box_examples_coordinates": [
      [[5, 6], [5, 16], [15, 16], [15, 6]],
      [[20, 30], [20, 44], [28, 44], [28, 30]]
    ]
  }
})";

const char* kDims = R"({"7.jpg": {"width": 64, "height": 48}})";

}  // namespace

TEST_CASE("fsc147 polygons reduce to axis-aligned boxes") {
  Diagnostics diag;
  const auto records = parse_annotations(kFscFixture, kDims, AnnotationSchema::kFsc147, &diag);
  REQUIRE(records.size() == 1);
  const auto& r = records.at("7.jpg");
  CHECK(r.width == 64);
  CHECK(r.height == 48);
  CHECK(r.count() == 2);
  CHECK(r.points[0] == Point{10.5, 20.25});
  REQUIRE(r.exemplar_boxes.size() == 2);
  CHECK(r.exemplar_boxes[0] == Box{5, 6, 15, 16});
  CHECK(r.exemplar_boxes[1] == Box{20, 30, 28, 44});
  CHECK(diag.clamped_points == 0);
}

TEST_CASE("empty annotation object loads as an empty map") {
  Diagnostics diag;
  CHECK(parse_annotations("{}", "", AnnotationSchema::kFsc147, &diag).empty());
  CHECK(diag.warnings.empty());
}

TEST_CASE("out-of-bounds points are clamped, never dropped") {
  const std::string annotations =
      R"({"a": {"points": [[67.0, 12.0], [3.0, 4.0]], "boxes": [[1, 1, 5, 5]]}})";
  Diagnostics diag;
  const auto records = parse_annotations(annotations, R"({"a": [64, 48]})",
                                         AnnotationSchema::kGeneric, &diag);
  const auto& r = records.at("a");
  REQUIRE(r.count() == 2);
  CHECK(r.points[0].x < 64.0);
  CHECK(r.points[0].x == std::nextafter(64.0, 0.0));
  CHECK(r.points[0].y == 12.0);
  CHECK(diag.clamped_points == 1);
  CHECK(diag.warnings.size() == 1);

  const auto negative = parse_annotations(
      R"({"b": {"points": [[-2.0, 48.0]], "boxes": [[1, 1, 5, 5]]}})", R"({"b": [64, 48]})",
      AnnotationSchema::kGeneric, &diag);
  CHECK(negative.at("b").points[0] == Point{0.0, std::nextafter(48.0, 0.0)});
  CHECK(diag.clamped_points == 2);
}

TEST_CASE("degenerate and out-of-bounds boxes reject the record") {
  CHECK_THROWS_AS(parse_annotations(R"({"a": {"points": [[1, 1]], "boxes": [[5, 5, 5, 9]]}})",
                                    R"({"a": [64, 48]})", AnnotationSchema::kGeneric),
                  ValidationError);
  CHECK_THROWS_AS(parse_annotations(R"({"a": {"points": [[1, 1]], "boxes": [[5, 5, 70, 9]]}})",
                                    R"({"a": [64, 48]})", AnnotationSchema::kGeneric),
                  ValidationError);
  CHECK_THROWS_AS(
      parse_annotations(R"({"a": {"points": [[1, 1]], "box_examples_coordinates": [[[3, 3], [3, 3], [3, 3], [3, 3]]]}})",
                        R"({"a": [64, 48]})", AnnotationSchema::kFsc147),
      ValidationError);
}

TEST_CASE("annotation errors") {
  TempDir dir("dataset-errors");
  CHECK_THROWS_AS(load_annotations(dir / "missing.json", std::nullopt, AnnotationSchema::kFsc147),
                  IoError);
  const auto bad = write_fixture(dir, "bad.json", "{ not json");
  CHECK_THROWS_AS(load_annotations(bad, std::nullopt, AnnotationSchema::kFsc147), IoError);
  CHECK_THROWS_AS(parse_annotations(R"({"a": {"points": []}})", "", AnnotationSchema::kFsc147),
                  ValidationError);  // no dimensions
  CHECK_THROWS_AS(parse_annotations(R"({"a": {"points": [[1, "x"]], "width": 4, "height": 4}})", "",
                                    AnnotationSchema::kGeneric),
                  ValidationError);
}

TEST_CASE("generic schema accepts inline dimensions and categories") {
  const auto records = parse_annotations(
      R"({"c1": {"width": 20, "height": 10, "points": [[1, 2]], "boxes": [[0, 0, 4, 4]], "category": "cars"}})",
      "", AnnotationSchema::kGeneric);
  CHECK(records.at("c1").width == 20);
  CHECK(records.at("c1").category == "cars");
}

TEST_CASE("splits") {
  const auto records = parse_annotations(
      R"({"a": {"points": [[1, 1]], "boxes": [[0, 0, 2, 2]]},
          "b": {"points": [[1, 1]], "boxes": [[0, 0, 2, 2]]}})",
      R"({"a": [8, 8], "b": [8, 8]})", AnnotationSchema::kGeneric);

  SUBCASE("single record assigned to train only") {
    Diagnostics diag;
    const auto ds = assign_splits(R"({"train": ["a"]})", records, &diag);
    CHECK(ds.ids(Split::kTrain).size() == 1);
    CHECK(ds.ids(Split::kVal).empty());
    CHECK(ds.ids(Split::kTest).empty());
    CHECK(ds.record("a").split == Split::kTrain);
    CHECK(diag.warnings.size() == 1);  // "b" unlisted
  }
  SUBCASE("same id in two splits") {
    CHECK_THROWS_AS(assign_splits(R"({"train": ["a"], "val": ["a"]})", records), ValidationError);
  }
  SUBCASE("id without record") {
    CHECK_THROWS_AS(assign_splits(R"({"train": ["zzz"]})", records), ValidationError);
  }
  SUBCASE("unknown split name") {
    CHECK_THROWS_AS(assign_splits(R"({"holdout": ["a"]})", records), ValidationError);
  }
}

TEST_CASE("train records need points; val/test categories must be unseen") {
  const auto records = parse_annotations(
      R"({"a": {"points": [], "boxes": [[0, 0, 2, 2]], "category": "cups"},
          "b": {"points": [[1, 1]], "boxes": [[0, 0, 2, 2]], "category": "cups"},
          "c": {"points": [[1, 1]], "boxes": [[0, 0, 2, 2]], "category": "keys"}})",
      R"({"a": [8, 8], "b": [8, 8], "c": [8, 8]})", AnnotationSchema::kGeneric);
  CHECK_THROWS_AS(assign_splits(R"({"train": ["a"]})", records), ValidationError);
  // "a" may sit in val (points are only required for train) but shares b's category.
  CHECK_THROWS_AS(assign_splits(R"({"val": ["a"], "train": ["b"]})", records), ValidationError);
  CHECK_NOTHROW(assign_splits(R"({"train": ["b"], "test": ["c"]})", records));
  CHECK_NOTHROW(assign_splits(R"({"train": ["c"], "val": ["a"]})", records));
}

TEST_CASE("FSC147-shaped corpus: 3659 train records and disjoint categories") {
  // Same shape as the public release: 6135 images, 3659/1286/1190, 89/29/29 categories.
  json annotations = json::object();
  json dims = json::object();
  json splits = {{"train", json::array()}, {"val", json::array()}, {"test", json::array()}};
  auto add = [&](int index, const char* split, int category) {
    const std::string id = std::to_string(index) + ".jpg";
    annotations[id] = {{"points", {{10.0, 12.0}, {20.0, 22.0}, {30.0, 5.0}}},
                       {"box_examples_coordinates",
                        {{{1, 1}, {1, 5}, {5, 5}, {5, 1}},
                         {{8, 8}, {8, 12}, {12, 12}, {12, 8}},
                         {{20, 20}, {20, 26}, {26, 26}, {26, 20}}}},
                       {"category", "class" + std::to_string(category)}};
    dims[id] = {{"width", 384}, {"height", 384}};
    splits[split].push_back(id);
  };
  int index = 0;
  for (int i = 0; i < 3659; ++i) add(index++, "train", i % 89);
  for (int i = 0; i < 1286; ++i) add(index++, "val", 89 + i % 29);
  for (int i = 0; i < 1190; ++i) add(index++, "test", 118 + i % 29);

  const auto records = parse_annotations(annotations.dump(), dims.dump(), AnnotationSchema::kFsc147);
  CHECK(records.size() == 6135);
  const auto ds = assign_splits(splits.dump(), records);
  CHECK(ds.ids(Split::kTrain).size() == 3659);
  std::set<std::string> train_categories, other_categories;
  for (const auto& id : ds.ids(Split::kTrain)) train_categories.insert(ds.record(id).category);
  for (const auto split : {Split::kVal, Split::kTest}) {
    for (const auto& id : ds.ids(split)) other_categories.insert(ds.record(id).category);
  }
  CHECK(train_categories.size() == 89);
  for (const auto& c : other_categories) CHECK_FALSE(train_categories.contains(c));
}

TEST_CASE("captions") {
  const auto records = parse_annotations(
      R"({"id1": {"points": [[1, 1]], "boxes": [[0, 0, 2, 2]], "category": "apples"},
          "id2": {"points": [[1, 1]], "boxes": [[0, 0, 2, 2]], "category": "sea shells"},
          "id3": {"points": [[1, 1]], "boxes": [[0, 0, 2, 2]]},
          "v1": {"points": [[1, 1]], "boxes": [[0, 0, 2, 2]]}})",
      R"({"id1": [8, 8], "id2": [8, 8], "id3": [8, 8], "v1": [8, 8]})", AnnotationSchema::kGeneric);
  const auto ds = assign_splits(R"({"train": ["id1", "id2", "id3"], "val": ["v1"]})", records);

  Diagnostics diag;
  const auto captioned = apply_captions(
      ds, R"({"id1": "a bunch of red apples on a table", "id3": "keys", "ghost": "x"})", &diag);
  CHECK(captioned.record("id1").caption == "a bunch of red apples on a table");
  CHECK(captioned.record("id2").caption == "a photo of sea shells");
  CHECK(captioned.record("v1").caption.empty());
  CHECK(diag.warnings.size() == 2);  // unknown id + fallback

  CHECK_THROWS_AS(apply_captions(ds, R"({"id1": "x", "id2": "y"})"), ValidationError);
  CHECK_THROWS_AS(apply_captions(ds, "[1, 2]"), IoError);
}

TEST_CASE("canonical serialization round-trips field by field") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 25; ++trial) {
    CountingDataset ds;
    std::uniform_int_distribution<int> n_records(1, 12), n_points(1, 40), dim(8, 300);
    const int n = n_records(rng);
    for (int i = 0; i < n; ++i) {
      ImageRecord r;
      r.image_id = "img_" + std::to_string(trial) + "_" + std::to_string(i);
      r.width = static_cast<std::uint32_t>(dim(rng));
      r.height = static_cast<std::uint32_t>(dim(rng));
      r.points = countaug::testing::random_points(rng, static_cast<std::size_t>(n_points(rng)),
                                                  r.width, r.height, true);
      r.exemplar_boxes.push_back({0.5, 0.25, r.width / 3.0, r.height / 7.0});
      const Split split = i % 3 == 0 ? Split::kVal : Split::kTrain;
      r.split = split;
      r.caption = "caption \"" + std::to_string(i) + "\" \xc3\xa9t\xc3\xa9";
      r.category = split == Split::kVal ? "held-out" : "seen";
      ds.split_lists[static_cast<std::size_t>(split)].push_back(r.image_id);
      ds.records.emplace(r.image_id, std::move(r));
    }
    const std::string text = serialize_dataset(ds);
    const CountingDataset back = deserialize_dataset(text);
    CHECK(back == ds);
    CHECK(serialize_dataset(back) == text);
  }
}

TEST_CASE("dataset file round trip through disk") {
  TempDir dir("dataset-file");
  const auto records = parse_annotations(kFscFixture, kDims, AnnotationSchema::kFsc147);
  auto ds = assign_splits(R"({"train": ["7.jpg"]})", records);
  ds = apply_captions(ds, R"({"7.jpg": "two bottles on a shelf"})");
  save_dataset(ds, dir / "ds.json");
  CHECK(load_dataset(dir / "ds.json") == ds);
  write_fixture(dir, "other.json", R"({"format": "other"})");
  CHECK_THROWS_AS(load_dataset(dir / "other.json"), IoError);
}
