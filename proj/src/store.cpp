// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#include "countaug/store.hpp"

#include "countaug/error.hpp"
#include "countaug/util.hpp"
#include "json.hpp"

namespace countaug {

void check_image_id_for_path(std::string_view image_id) {
  if (image_id.empty() || image_id == "." || image_id == ".." ||
      image_id.find_first_of("/\\") != std::string_view::npos ||
      image_id.find('\0') != std::string_view::npos) {
    throw ArgumentError("image id cannot be used as a directory name: " + std::string(image_id));
  }
}

AugmentationStore::AugmentationStore(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path AugmentationStore::image_path(const std::string& image_id,
                                                    std::uint32_t aug_index) const {
  check_image_id_for_path(image_id);
  return root_ / image_id / (std::to_string(aug_index) + ".png");
}

std::filesystem::path AugmentationStore::meta_path(const std::string& image_id,
                                                   std::uint32_t aug_index) const {
  check_image_id_for_path(image_id);
  return root_ / image_id / (std::to_string(aug_index) + ".meta.json");
}

bool AugmentationStore::contains(const std::string& image_id, std::uint32_t aug_index) const {
  std::error_code ec;
  return std::filesystem::is_regular_file(image_path(image_id, aug_index), ec) &&
         std::filesystem::is_regular_file(meta_path(image_id, aug_index), ec);
}

void AugmentationStore::write(const PlannedItem& item, std::span<const std::uint8_t> png,
                              std::string_view backend_id) {
  auto meta = nlohmann::json::parse(serialize_item(item));
  meta["backend_id"] = std::string(backend_id);
  const std::string meta_text = meta.dump(1) + "\n";

  const auto image = image_path(item.image_id, item.aug_index);
  const auto meta_file = meta_path(item.image_id, item.aug_index);
  std::lock_guard lock(mutex_);
  std::filesystem::create_directories(image.parent_path());
  auto image_tmp = image;
  image_tmp += ".tmp";
  auto meta_tmp = meta_file;
  meta_tmp += ".tmp";
  write_file(image_tmp, png);
  write_text_file(meta_tmp, meta_text);
  std::filesystem::rename(image_tmp, image);
  std::filesystem::rename(meta_tmp, meta_file);
}

std::string AugmentationStore::backend_id(const std::string& image_id,
                                          std::uint32_t aug_index) const {
  try {
    const auto meta = nlohmann::json::parse(read_text_file(meta_path(image_id, aug_index)));
    return meta.at("backend_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed augmentation meta: ") + e.what());
  }
}

}  // namespace countaug
