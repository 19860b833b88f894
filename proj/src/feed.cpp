// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#include "countaug/feed.hpp"

#include <map>

#include "countaug/error.hpp"
#include "countaug/util.hpp"
#include "json.hpp"

namespace countaug {

namespace {

// Keeps feed streams disjoint from plan streams for the same global seed.
constexpr std::uint64_t kFeedDomain = 0x6665656473747265ULL;

}  // namespace

std::uint64_t feed_seed(std::uint64_t global_seed, std::uint32_t epoch, std::string_view image_id) {
  return item_seed(global_seed ^ kFeedDomain, image_id, epoch);
}

std::vector<ManifestEntry> epoch_manifest(const CountingDataset& dataset,
                                          const AugmentationPlan& plan,
                                          const AugmentationIndex& store, double p_0,
                                          std::uint32_t epoch, std::uint64_t global_seed,
                                          const FeedLayout& layout) {
  if (!(p_0 >= 0.0 && p_0 <= 1.0)) throw ArgumentError("epoch_manifest: p_0 outside [0, 1]");
  if (p_0 > 0.0 && plan.items.empty()) {
    throw ArgumentError("epoch_manifest: p_0 > 0 requires a non-empty plan");
  }

  std::map<std::string, std::vector<const PlannedItem*>> by_image;
  for (const auto& item : plan.items) by_image[item.image_id].push_back(&item);

  if (p_0 > 0.0) {
    std::vector<std::string> missing;
    for (const auto& id : dataset.ids(Split::kTrain)) {
      const auto it = by_image.find(id);
      if (it == by_image.end()) {
        missing.push_back(id + " (no planned augmentations)");
        continue;
      }
      for (const auto* item : it->second) {
        if (!store.contains(item->image_id, item->aug_index)) {
          missing.push_back(item->image_id + "/" + std::to_string(item->aug_index));
        }
      }
    }
    if (!missing.empty()) {
      std::string message = std::to_string(missing.size()) + " augmentation(s) missing from store:";
      for (std::size_t i = 0; i < missing.size() && i < 10; ++i) message += " " + missing[i];
      if (missing.size() > 10) message += " ...";
      throw ValidationError(message);
    }
  }

  std::vector<ManifestEntry> entries;
  entries.reserve(dataset.ids(Split::kTrain).size());
  for (const auto& id : dataset.ids(Split::kTrain)) {
    const ImageRecord& record = dataset.record(id);
    ManifestEntry entry;
    entry.epoch = epoch;
    entry.image_id = id;
    entry.density_path = (layout.densities_dir / density_ref_for(id)).string();
    entry.exemplar_boxes = record.exemplar_boxes;

    SeedStream stream(feed_seed(global_seed, epoch, id));
    const bool replace = stream.bernoulli(p_0);
    if (replace) {
      const auto& items = by_image.at(id);
      const PlannedItem& item = *items[stream.uniform_index(items.size())];
      entry.source = ImageSource::kAugmented;
      entry.aug_index = item.aug_index;
      entry.image_path = store.image_path(id, item.aug_index).string();
      entry.caption_used = item.caption_used;
      entry.boxes_may_mismatch = item.kind == AugmentationKind::kDiverse;
    } else {
      entry.source = ImageSource::kReal;
      entry.image_path = (layout.images_dir / id).string();
      entry.caption_used = record.caption;
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::string plan_hash(const AugmentationPlan& plan) { return sha256_hex(serialize_plan(plan)); }

std::string serialize_manifest(std::span<const ManifestEntry> entries, std::uint32_t epoch,
                               double p_0, std::uint64_t global_seed, const std::string& hash) {
  using nlohmann::json;
  std::string out = json{{"epoch", epoch}, {"p_0", p_0}, {"global_seed", global_seed},
                         {"plan_hash", hash}}.dump() + "\n";
  for (const auto& e : entries) {
    json boxes = json::array();
    for (const auto& b : e.exemplar_boxes) boxes.push_back({b.x1, b.y1, b.x2, b.y2});
    const json line = {{"epoch", e.epoch},
                       {"image_id", e.image_id},
                       {"resolved_source", e.source == ImageSource::kReal ? "real" : "augmented"},
                       {"aug_index", e.aug_index ? json(*e.aug_index) : json(nullptr)},
                       {"image_path", e.image_path},
                       {"density_path", e.density_path},
                       {"exemplar_boxes", boxes},
                       {"caption_used", e.caption_used},
                       {"boxes_may_mismatch", e.boxes_may_mismatch}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

}  // namespace countaug
