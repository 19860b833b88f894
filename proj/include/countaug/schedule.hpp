// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "countaug/caption.hpp"
#include "countaug/dataset.hpp"

namespace countaug {

inline constexpr std::uint32_t kDefaultAugmentations = 10;
inline constexpr double kDefaultDiverseFraction = 0.5;

enum class AugmentationKind { kBaseline, kDiverse };

std::string_view kind_name(AugmentationKind kind);
std::optional<AugmentationKind> parse_kind(std::string_view name);

// One generation job. The density and exemplar boxes always belong to
// image_id; only the caption may come from another image.
struct PlannedItem {
  std::string image_id;
  std::uint32_t aug_index = 0;
  AugmentationKind kind = AugmentationKind::kBaseline;
  std::string caption_used;
  std::string caption_source_id;
  std::string density_ref;
  std::vector<Box> exemplar_boxes;
  std::uint64_t seed = 0;

  friend bool operator==(const PlannedItem&, const PlannedItem&) = default;
};

struct AugmentationPlan {
  std::uint64_t global_seed = 0;
  std::uint32_t m = kDefaultAugmentations;
  double p_c = kDefaultDiverseFraction;
  double t_c = kDefaultSimilarityThreshold;
  // Canonical order: train split order, then aug_index.
  std::vector<PlannedItem> items;
  // Images that had diverse slots but no compatible partner.
  std::vector<std::string> downgraded;

  friend bool operator==(const AugmentationPlan&, const AugmentationPlan&) = default;
};

/// Seed of one augmentation: mix64(fnv1a64(le64(global_seed) || utf8(image_id) || le64(aug_index))).
std::uint64_t item_seed(std::uint64_t global_seed, std::string_view image_id,
                        std::uint64_t aug_index);

/// round_half_up(p_c * m).
std::uint32_t diverse_slot_count(std::uint32_t m, double p_c);

/// File name used for an image's ground-truth density map.
std::string density_ref_for(std::string_view image_id);

/// For every train image picks diverse_slot_count(m, p_c) slots by a seeded
/// shuffle of 0..m-1 and draws each diverse caption uniformly from the image's
/// candidates using the item seed. Images without candidates keep all-baseline
/// items and are listed in `downgraded`. Throws ArgumentError for m == 0 or
/// p_c outside [0, 1].
AugmentationPlan build_plan(const CountingDataset& dataset, const CompatibilitySets& compat,
                            std::uint32_t m, double p_c, std::uint64_t global_seed);

/// One plan line (JSON object).
std::string serialize_item(const PlannedItem& item);
PlannedItem deserialize_item(std::string_view line);

// JSON lines: header {global_seed, M, p_c, t_c, tool_version, downgraded}, then one item per line.
std::string serialize_plan(const AugmentationPlan& plan);
AugmentationPlan deserialize_plan(std::string_view text);
void save_plan(const AugmentationPlan& plan, const std::filesystem::path& path);
AugmentationPlan load_plan(const std::filesystem::path& path);

}  // namespace countaug
