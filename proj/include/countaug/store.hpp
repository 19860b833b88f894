// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <string_view>

#include "countaug/schedule.hpp"

namespace countaug {

// Read-only view of which augmentations exist and where they live.
class AugmentationIndex {
 public:
  virtual ~AugmentationIndex() = default;
  virtual bool contains(const std::string& image_id, std::uint32_t aug_index) const = 0;
  virtual std::filesystem::path image_path(const std::string& image_id,
                                           std::uint32_t aug_index) const = 0;
};

// Directory layout <root>/<image_id>/<aug_index>.png plus
// <root>/<image_id>/<aug_index>.meta.json (the planned item and backend_id).
// Writes are serialised by an internal mutex and land via rename.
class AugmentationStore final : public AugmentationIndex {
 public:
  explicit AugmentationStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  bool contains(const std::string& image_id, std::uint32_t aug_index) const override;
  std::filesystem::path image_path(const std::string& image_id,
                                   std::uint32_t aug_index) const override;
  std::filesystem::path meta_path(const std::string& image_id, std::uint32_t aug_index) const;

  void write(const PlannedItem& item, std::span<const std::uint8_t> png,
             std::string_view backend_id);
  /// Throws IoError if the meta file is missing or malformed.
  std::string backend_id(const std::string& image_id, std::uint32_t aug_index) const;

 private:
  std::filesystem::path root_;
  mutable std::mutex mutex_;
};

/// Throws ArgumentError for ids that cannot be used as a single path component.
void check_image_id_for_path(std::string_view image_id);

}  // namespace countaug
