// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#include "countaug/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "countaug/error.hpp"
#include "countaug/util.hpp"
#include "json.hpp"

namespace countaug {

using nlohmann::json;

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "unknown";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

std::optional<AnnotationSchema> parse_schema(std::string_view name) {
  if (name == "fsc147") return AnnotationSchema::kFsc147;
  if (name == "generic") return AnnotationSchema::kGeneric;
  return std::nullopt;
}

const ImageRecord& CountingDataset::record(const std::string& image_id) const {
  const auto it = records.find(image_id);
  if (it == records.end()) throw ArgumentError("unknown image id: " + image_id);
  return it->second;
}

namespace {

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError("malformed JSON in " + std::string(what) + ": " + e.what());
  }
}

void warn(Diagnostics* diagnostics, std::string message) {
  if (diagnostics) diagnostics->warnings.push_back(std::move(message));
}

double finite_number(const json& value, const std::string& context) {
  if (!value.is_number()) throw ValidationError(context + ": expected a number");
  const double v = value.get<double>();
  if (!std::isfinite(v)) throw ValidationError(context + ": non-finite coordinate");
  return v;
}

// Largest double strictly below `limit`, so clamped points stay in [0, limit).
double clamp_coordinate(double v, std::uint32_t limit, bool& clamped) {
  if (v < 0.0) {
    clamped = true;
    return 0.0;
  }
  if (v >= static_cast<double>(limit)) {
    clamped = true;
    return std::nextafter(static_cast<double>(limit), 0.0);
  }
  return v;
}

void validate_box(const Box& box, const ImageRecord& record) {
  if (!(box.x1 < box.x2) || !(box.y1 < box.y2)) {
    throw ValidationError("record " + record.image_id + ": exemplar box with non-positive area");
  }
  if (box.x1 < 0 || box.y1 < 0 || box.x2 > record.width || box.y2 > record.height) {
    throw ValidationError("record " + record.image_id + ": exemplar box outside image bounds");
  }
}

std::pair<std::uint32_t, std::uint32_t> parse_dims(const json& value, const std::string& id) {
  std::int64_t w = 0, h = 0;
  if (value.is_array() && value.size() == 2 && value[0].is_number_integer() &&
      value[1].is_number_integer()) {
    w = value[0].get<std::int64_t>();
    h = value[1].get<std::int64_t>();
  } else if (value.is_object() && value.contains("width") && value.contains("height") &&
             value["width"].is_number_integer() && value["height"].is_number_integer()) {
    w = value["width"].get<std::int64_t>();
    h = value["height"].get<std::int64_t>();
  } else {
    throw ValidationError("record " + id + ": malformed image dimensions");
  }
  if (w <= 0 || h <= 0 || w > std::numeric_limits<std::uint32_t>::max() ||
      h > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError("record " + id + ": image dimensions must be positive");
  }
  return {static_cast<std::uint32_t>(w), static_cast<std::uint32_t>(h)};
}

Box box_from_corners(const json& polygon, const std::string& id) {
  if (!polygon.is_array() || polygon.empty()) {
    throw ValidationError("record " + id + ": exemplar polygon must be a list of corners");
  }
  double x1 = std::numeric_limits<double>::infinity(), y1 = x1;
  double x2 = -x1, y2 = -x1;
  for (const auto& corner : polygon) {
    if (!corner.is_array() || corner.size() != 2) {
      throw ValidationError("record " + id + ": exemplar corner must be [x, y]");
    }
    const double x = finite_number(corner[0], "record " + id);
    const double y = finite_number(corner[1], "record " + id);
    x1 = std::min(x1, x);
    y1 = std::min(y1, y);
    x2 = std::max(x2, x);
    y2 = std::max(y2, y);
  }
  return {x1, y1, x2, y2};
}

Box box_from_array(const json& value, const std::string& id) {
  if (!value.is_array() || value.size() != 4) {
    throw ValidationError("record " + id + ": box must be [x1, y1, x2, y2]");
  }
  const std::string context = "record " + id;
  return {finite_number(value[0], context), finite_number(value[1], context),
          finite_number(value[2], context), finite_number(value[3], context)};
}

std::string optional_string(const json& entry, const char* key, const std::string& id) {
  if (!entry.contains(key) || entry[key].is_null()) return {};
  if (!entry[key].is_string()) {
    throw ValidationError("record " + id + ": field '" + key + "' must be a string");
  }
  return entry[key].get<std::string>();
}

void check_split_invariants(const CountingDataset& dataset) {
  std::map<std::string, Split> seen;
  for (const Split split : kAllSplits) {
    for (const auto& id : dataset.ids(split)) {
      const auto [it, inserted] = seen.emplace(id, split);
      if (!inserted) {
        throw ValidationError("image " + id + " appears in both " +
                              std::string(split_name(it->second)) + " and " +
                              std::string(split_name(split)));
      }
      if (!dataset.records.contains(id)) {
        throw ValidationError("split " + std::string(split_name(split)) +
                              " lists unknown image " + id);
      }
    }
  }
  std::set<std::string> train_categories;
  for (const auto& id : dataset.ids(Split::kTrain)) {
    const auto& record = dataset.records.at(id);
    if (record.points.empty()) {
      throw ValidationError("train record " + id + " has no annotated points");
    }
    if (record.exemplar_boxes.empty()) {
      throw ValidationError("train record " + id + " has no exemplar boxes");
    }
    if (!record.category.empty()) train_categories.insert(record.category);
  }
  for (const Split split : {Split::kVal, Split::kTest}) {
    for (const auto& id : dataset.ids(split)) {
      const auto& category = dataset.records.at(id).category;
      if (!category.empty() && train_categories.contains(category)) {
        throw ValidationError("category '" + category + "' of " + std::string(split_name(split)) +
                              " image " + id + " also appears in train");
      }
    }
  }
}

}  // namespace

RecordMap parse_annotations(std::string_view annotation_json, std::string_view image_dims_json,
                            AnnotationSchema schema, Diagnostics* diagnostics) {
  const json annotations = parse_json(annotation_json, "annotation file");
  if (!annotations.is_object()) throw IoError("annotation file must be a JSON object keyed by id");
  json dims = json::object();
  if (!image_dims_json.empty()) {
    dims = parse_json(image_dims_json, "image dimension file");
    if (!dims.is_object()) throw IoError("image dimension file must be a JSON object keyed by id");
  }

  const char* boxes_key = schema == AnnotationSchema::kFsc147 ? "box_examples_coordinates" : "boxes";
  RecordMap records;
  for (const auto& [id, entry] : annotations.items()) {
    if (!entry.is_object()) throw ValidationError("record " + id + ": expected an object");
    ImageRecord record;
    record.image_id = id;

    if (dims.contains(id)) {
      std::tie(record.width, record.height) = parse_dims(dims[id], id);
    } else if (schema == AnnotationSchema::kGeneric && entry.contains("width")) {
      std::tie(record.width, record.height) = parse_dims(entry, id);
    } else {
      throw ValidationError("record " + id + ": no image dimensions available");
    }

    if (!entry.contains("points") || !entry["points"].is_array()) {
      throw ValidationError("record " + id + ": missing point list");
    }
    std::size_t clamped_here = 0;
    for (const auto& p : entry["points"]) {
      if (!p.is_array() || p.size() != 2) {
        throw ValidationError("record " + id + ": point must be [x, y]");
      }
      bool clamped = false;
      const double x = clamp_coordinate(finite_number(p[0], "record " + id), record.width, clamped);
      const double y = clamp_coordinate(finite_number(p[1], "record " + id), record.height, clamped);
      record.points.push_back({x, y});
      if (clamped) ++clamped_here;
    }
    if (clamped_here > 0) {
      if (diagnostics) diagnostics->clamped_points += clamped_here;
      warn(diagnostics, "record " + id + ": clamped " + std::to_string(clamped_here) +
                            " out-of-bounds point(s)");
    }

    if (entry.contains(boxes_key)) {
      if (!entry[boxes_key].is_array()) {
        throw ValidationError("record " + id + ": '" + boxes_key + "' must be a list");
      }
      for (const auto& b : entry[boxes_key]) {
        const Box box = schema == AnnotationSchema::kFsc147 ? box_from_corners(b, id)
                                                            : box_from_array(b, id);
        validate_box(box, record);
        record.exemplar_boxes.push_back(box);
      }
    }
    if (record.exemplar_boxes.empty()) warn(diagnostics, "record " + id + ": no exemplar boxes");
    record.category = optional_string(entry, "category", id);
    records.emplace(id, std::move(record));
  }
  return records;
}

RecordMap load_annotations(const std::filesystem::path& annotation_file,
                           const std::optional<std::filesystem::path>& image_dims_source,
                           AnnotationSchema schema, Diagnostics* diagnostics) {
  const std::string annotations = read_text_file(annotation_file);
  const std::string dims = image_dims_source ? read_text_file(*image_dims_source) : std::string();
  return parse_annotations(annotations, dims, schema, diagnostics);
}

CountingDataset assign_splits(std::string_view split_json, const RecordMap& records,
                              Diagnostics* diagnostics) {
  const json splits = parse_json(split_json, "split file");
  if (!splits.is_object()) throw IoError("split file must map split name to id list");
  CountingDataset dataset;
  for (const auto& [name, ids] : splits.items()) {
    const auto split = parse_split(name);
    if (!split) throw ValidationError("unknown split name: " + name);
    if (!ids.is_array()) throw ValidationError("split " + name + " must be a list of ids");
    auto& list = dataset.split_lists[static_cast<std::size_t>(*split)];
    for (const auto& id : ids) {
      if (!id.is_string()) throw ValidationError("split " + name + " contains a non-string id");
      list.push_back(id.get<std::string>());
    }
  }
  // Existence is checked before copying so the error names the missing id.
  for (const Split split : kAllSplits) {
    for (const auto& id : dataset.ids(split)) {
      const auto it = records.find(id);
      if (it == records.end()) {
        throw ValidationError("split " + std::string(split_name(split)) +
                              " lists unknown image " + id);
      }
      ImageRecord record = it->second;
      record.split = split;
      const auto [pos, inserted] = dataset.records.emplace(id, std::move(record));
      if (!inserted) {
        throw ValidationError("image " + id + " appears in both " +
                              std::string(split_name(*pos->second.split)) + " and " +
                              std::string(split_name(split)));
      }
    }
  }
  check_split_invariants(dataset);
  const std::size_t unlisted = records.size() - dataset.records.size();
  if (unlisted > 0) {
    warn(diagnostics, std::to_string(unlisted) + " annotated image(s) not listed in any split");
  }
  return dataset;
}

CountingDataset load_splits(const std::filesystem::path& split_file, const RecordMap& records,
                            Diagnostics* diagnostics) {
  return assign_splits(read_text_file(split_file), records, diagnostics);
}

std::string fallback_caption(std::string_view category) {
  return "a photo of " + std::string(category);
}

CountingDataset apply_captions(CountingDataset dataset, std::string_view caption_json,
                               Diagnostics* diagnostics) {
  const json captions = parse_json(caption_json, "caption file");
  if (!captions.is_object()) throw IoError("caption file must map image id to caption");
  std::size_t unknown = 0;
  for (const auto& [id, caption] : captions.items()) {
    if (!caption.is_string()) throw ValidationError("caption for " + id + " must be a string");
    auto it = dataset.records.find(id);
    if (it == dataset.records.end()) {
      ++unknown;
      continue;
    }
    it->second.caption = caption.get<std::string>();
  }
  if (unknown > 0) {
    warn(diagnostics, "ignored captions for " + std::to_string(unknown) + " unknown image id(s)");
  }
  for (const auto& id : dataset.ids(Split::kTrain)) {
    auto& record = dataset.records.at(id);
    if (!record.caption.empty()) continue;
    if (record.category.empty()) {
      throw ValidationError("train record " + id + " has neither a caption nor a category");
    }
    record.caption = fallback_caption(record.category);
    warn(diagnostics, "record " + id + ": caption missing, using category fallback");
  }
  return dataset;
}

CountingDataset attach_captions(CountingDataset dataset, const std::filesystem::path& caption_file,
                                Diagnostics* diagnostics) {
  return apply_captions(std::move(dataset), read_text_file(caption_file), diagnostics);
}

std::string serialize_dataset(const CountingDataset& dataset) {
  json splits = json::object();
  for (const Split split : kAllSplits) splits[std::string(split_name(split))] = dataset.ids(split);
  json records = json::object();
  for (const auto& [id, record] : dataset.records) {
    json points = json::array();
    for (const auto& p : record.points) points.push_back({p.x, p.y});
    json boxes = json::array();
    for (const auto& b : record.exemplar_boxes) boxes.push_back({b.x1, b.y1, b.x2, b.y2});
    json entry = {{"width", record.width}, {"height", record.height}, {"points", points},
                  {"boxes", boxes},        {"caption", record.caption},
                  {"category", record.category}};
    entry["split"] = record.split ? json(split_name(*record.split)) : json(nullptr);
    records[id] = std::move(entry);
  }
  const json doc = {{"format", "countaug-dataset-v1"}, {"splits", splits}, {"records", records}};
  return doc.dump(1) + "\n";
}

CountingDataset deserialize_dataset(std::string_view text) {
  const json doc = parse_json(text, "dataset file");
  if (!doc.is_object() || doc.value("format", "") != "countaug-dataset-v1") {
    throw IoError("not a countaug dataset file");
  }
  CountingDataset dataset;
  try {
    for (const auto& [id, entry] : doc.at("records").items()) {
      ImageRecord record;
      record.image_id = id;
      record.width = entry.at("width").get<std::uint32_t>();
      record.height = entry.at("height").get<std::uint32_t>();
      if (record.width == 0 || record.height == 0) {
        throw ValidationError("record " + id + ": image dimensions must be positive");
      }
      for (const auto& p : entry.at("points")) {
        const Point point{p.at(0).get<double>(), p.at(1).get<double>()};
        if (!(point.x >= 0 && point.x < record.width && point.y >= 0 && point.y < record.height)) {
          throw ValidationError("record " + id + ": point outside image bounds");
        }
        record.points.push_back(point);
      }
      for (const auto& b : entry.at("boxes")) {
        const Box box{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                      b.at(3).get<double>()};
        validate_box(box, record);
        record.exemplar_boxes.push_back(box);
      }
      record.caption = entry.at("caption").get<std::string>();
      record.category = entry.at("category").get<std::string>();
      if (!entry.at("split").is_null()) {
        record.split = parse_split(entry.at("split").get<std::string>());
        if (!record.split) throw ValidationError("record " + id + ": unknown split");
      }
      dataset.records.emplace(id, std::move(record));
    }
    for (const auto& [name, ids] : doc.at("splits").items()) {
      const auto split = parse_split(name);
      if (!split) throw ValidationError("unknown split name: " + name);
      dataset.split_lists[static_cast<std::size_t>(*split)] = ids.get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed dataset file: ") + e.what());
  }
  check_split_invariants(dataset);
  for (const Split split : kAllSplits) {
    for (const auto& id : dataset.ids(split)) {
      if (dataset.records.at(id).split != split) {
        throw ValidationError("record " + id + ": split field disagrees with split lists");
      }
    }
  }
  return dataset;
}

void save_dataset(const CountingDataset& dataset, const std::filesystem::path& path) {
  write_text_file(path, serialize_dataset(dataset));
}

CountingDataset load_dataset(const std::filesystem::path& path) {
  return deserialize_dataset(read_text_file(path));
}

}  // namespace countaug
