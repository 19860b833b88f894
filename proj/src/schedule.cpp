// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#include "countaug/schedule.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <sstream>

#include "countaug/error.hpp"
#include "countaug/util.hpp"
#include "countaug/version.hpp"
#include "json.hpp"

namespace countaug {

using nlohmann::json;

namespace {

// Stream index reserved for the slot shuffle; aug_index never reaches it.
constexpr std::uint64_t kSlotShuffleStream = ~std::uint64_t{0};

std::array<std::uint8_t, 8> le64(std::uint64_t v) {
  std::array<std::uint8_t, 8> out{};
  for (std::size_t i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
  return out;
}

json item_to_json(const PlannedItem& item) {
  json boxes = json::array();
  for (const auto& b : item.exemplar_boxes) boxes.push_back({b.x1, b.y1, b.x2, b.y2});
  return {{"image_id", item.image_id},
          {"aug_index", item.aug_index},
          {"kind", kind_name(item.kind)},
          {"caption_used", item.caption_used},
          {"caption_source_id", item.caption_source_id},
          {"density_ref", item.density_ref},
          {"exemplar_boxes", boxes},
          {"seed", item.seed}};
}

PlannedItem item_from_json(const json& j) {
  PlannedItem item;
  item.image_id = j.at("image_id").get<std::string>();
  item.aug_index = j.at("aug_index").get<std::uint32_t>();
  const auto kind = parse_kind(j.at("kind").get<std::string>());
  if (!kind) throw ValidationError("plan item " + item.image_id + ": unknown kind");
  item.kind = *kind;
  item.caption_used = j.at("caption_used").get<std::string>();
  item.caption_source_id = j.at("caption_source_id").get<std::string>();
  item.density_ref = j.at("density_ref").get<std::string>();
  for (const auto& b : j.at("exemplar_boxes")) {
    item.exemplar_boxes.push_back(
        {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()});
  }
  item.seed = j.at("seed").get<std::uint64_t>();
  return item;
}

}  // namespace

std::string_view kind_name(AugmentationKind kind) {
  return kind == AugmentationKind::kBaseline ? "baseline" : "diverse";
}

std::optional<AugmentationKind> parse_kind(std::string_view name) {
  if (name == "baseline") return AugmentationKind::kBaseline;
  if (name == "diverse") return AugmentationKind::kDiverse;
  return std::nullopt;
}

std::uint64_t item_seed(std::uint64_t global_seed, std::string_view image_id,
                        std::uint64_t aug_index) {
  std::uint64_t h = fnv1a64(le64(global_seed));
  h = fnv1a64(image_id, h);
  h = fnv1a64(le64(aug_index), h);
  return mix64(h);
}

std::uint32_t diverse_slot_count(std::uint32_t m, double p_c) {
  return static_cast<std::uint32_t>(round_half_up(p_c * static_cast<double>(m)));
}

std::string density_ref_for(std::string_view image_id) { return std::string(image_id) + ".dmap"; }

AugmentationPlan build_plan(const CountingDataset& dataset, const CompatibilitySets& compat,
                            std::uint32_t m, double p_c, std::uint64_t global_seed) {
  if (m == 0) throw ArgumentError("build_plan: M must be at least 1");
  if (!(p_c >= 0.0 && p_c <= 1.0)) throw ArgumentError("build_plan: p_c outside [0, 1]");
  AugmentationPlan plan;
  plan.global_seed = global_seed;
  plan.m = m;
  plan.p_c = p_c;
  plan.t_c = compat.threshold;
  const std::uint32_t diverse_slots = diverse_slot_count(m, p_c);
  const auto& train = dataset.ids(Split::kTrain);
  plan.items.reserve(train.size() * m);

  std::vector<std::uint32_t> slots(m);
  std::vector<bool> is_diverse(m);
  for (const auto& id : train) {
    const ImageRecord& record = dataset.record(id);
    const auto& candidates = compat.of(id);
    const bool can_swap = !candidates.empty();
    if (diverse_slots > 0 && !can_swap) plan.downgraded.push_back(id);

    std::iota(slots.begin(), slots.end(), 0U);
    SeedStream slot_stream(item_seed(global_seed, id, kSlotShuffleStream));
    slot_stream.shuffle(slots);
    std::fill(is_diverse.begin(), is_diverse.end(), false);
    if (can_swap) {
      for (std::uint32_t s = 0; s < diverse_slots; ++s) is_diverse[slots[s]] = true;
    }

    for (std::uint32_t j = 0; j < m; ++j) {
      PlannedItem item;
      item.image_id = id;
      item.aug_index = j;
      item.seed = item_seed(global_seed, id, j);
      item.density_ref = density_ref_for(id);
      item.exemplar_boxes = record.exemplar_boxes;
      if (is_diverse[j]) {
        SeedStream draw(item.seed);
        const auto& source = candidates[draw.uniform_index(candidates.size())];
        item.kind = AugmentationKind::kDiverse;
        item.caption_source_id = source;
        item.caption_used = dataset.record(source).caption;
      } else {
        item.kind = AugmentationKind::kBaseline;
        item.caption_source_id = id;
        item.caption_used = record.caption;
      }
      plan.items.push_back(std::move(item));
    }
  }
  return plan;
}

std::string serialize_item(const PlannedItem& item) { return item_to_json(item).dump(); }

PlannedItem deserialize_item(std::string_view line) {
  try {
    return item_from_json(json::parse(line));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed plan item: ") + e.what());
  }
}

std::string serialize_plan(const AugmentationPlan& plan) {
  const json header = {{"global_seed", plan.global_seed}, {"M", plan.m},
                       {"p_c", plan.p_c},                 {"t_c", plan.t_c},
                       {"tool_version", kToolVersion},    {"downgraded", plan.downgraded}};
  std::string out = header.dump() + "\n";
  for (const auto& item : plan.items) {
    out += item_to_json(item).dump();
    out += '\n';
  }
  return out;
}

AugmentationPlan deserialize_plan(std::string_view text) {
  AugmentationPlan plan;
  std::istringstream in{std::string(text)};
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (!have_header) {
        plan.global_seed = j.at("global_seed").get<std::uint64_t>();
        plan.m = j.at("M").get<std::uint32_t>();
        plan.p_c = j.at("p_c").get<double>();
        plan.t_c = j.at("t_c").get<double>();
        if (j.contains("downgraded")) plan.downgraded = j["downgraded"].get<std::vector<std::string>>();
        have_header = true;
        continue;
      }
      plan.items.push_back(item_from_json(j));
    }
  } catch (const json::exception& e) {
    throw IoError("malformed plan at line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) throw IoError("plan file has no header line");
  if (plan.m == 0) throw ValidationError("plan header: M must be at least 1");
  if (plan.items.size() % plan.m != 0) {
    throw ValidationError("plan item count is not a multiple of M");
  }
  for (std::size_t i = 0; i < plan.items.size(); ++i) {
    const auto& item = plan.items[i];
    const auto& first = plan.items[i - i % plan.m];
    if (item.aug_index != i % plan.m || item.image_id != first.image_id) {
      throw ValidationError("plan items for " + item.image_id + " are not in canonical order");
    }
    if (item.kind == AugmentationKind::kBaseline && item.caption_source_id != item.image_id) {
      throw ValidationError("baseline item for " + item.image_id + " borrows a caption");
    }
  }
  return plan;
}

void save_plan(const AugmentationPlan& plan, const std::filesystem::path& path) {
  write_text_file(path, serialize_plan(plan));
}

AugmentationPlan load_plan(const std::filesystem::path& path) {
  return deserialize_plan(read_text_file(path));
}

}  // namespace countaug
