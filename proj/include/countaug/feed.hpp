// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "countaug/dataset.hpp"
#include "countaug/schedule.hpp"
#include "countaug/store.hpp"

namespace countaug {

inline constexpr double kDefaultReplacementProbability = 0.5;

enum class ImageSource { kReal, kAugmented };

// Where real images and ground-truth densities live on disk.
struct FeedLayout {
  std::filesystem::path images_dir;
  std::filesystem::path densities_dir;
};

struct ManifestEntry {
  std::uint32_t epoch = 0;
  std::string image_id;
  ImageSource source = ImageSource::kReal;
  std::optional<std::uint32_t> aug_index;
  std::string image_path;
  std::string density_path;  // always the original ground truth
  std::vector<Box> exemplar_boxes;  // always the original boxes
  std::string caption_used;
  bool boxes_may_mismatch = false;  // true iff a diverse augmentation

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Seed of the per-(epoch, image) draw stream.
std::uint64_t feed_seed(std::uint64_t global_seed, std::uint32_t epoch, std::string_view image_id);

/// For each train image (split order), a Bernoulli(p_0) draw from the
/// (global_seed, epoch, image_id) stream picks real vs augmented; an augmented
/// entry then takes one of the image's plan items uniformly from the same stream.
///
/// Throws ArgumentError for p_0 outside [0, 1] or p_0 > 0 with an empty plan,
/// and ValidationError naming the first missing augmentations when the store
/// lacks planned items (checked only when p_0 > 0).
std::vector<ManifestEntry> epoch_manifest(const CountingDataset& dataset,
                                          const AugmentationPlan& plan,
                                          const AugmentationIndex& store, double p_0,
                                          std::uint32_t epoch, std::uint64_t global_seed,
                                          const FeedLayout& layout = {});

/// SHA-256 of the serialized plan.
std::string plan_hash(const AugmentationPlan& plan);

// JSON lines: header {epoch, p_0, global_seed, plan_hash}, then one entry per line.
std::string serialize_manifest(std::span<const ManifestEntry> entries, std::uint32_t epoch,
                               double p_0, std::uint64_t global_seed, const std::string& plan_hash);

}  // namespace countaug
