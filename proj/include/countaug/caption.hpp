// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "countaug/dataset.hpp"
#include "countaug/util.hpp"

namespace countaug {

inline constexpr std::size_t kHashedDimension = 4096;
inline constexpr double kDefaultSimilarityThreshold = 0.7;

// Unit-L2-norm caption vector.
struct CaptionEmbedding {
  std::string caption_id;
  std::vector<float> vector;
};

class CaptionEncoder {
 public:
  virtual ~CaptionEncoder() = default;
  virtual CaptionEmbedding embed(const std::string& caption_id, std::string_view caption) const = 0;
};

// Signed feature-hashing encoder over word tokens and per-token character
// trigrams.
//
// The caption is lowercased (ASCII) and split on every byte that is not
// [a-z0-9]; bytes >= 0x80 count as token characters so UTF-8 words survive.
// Each token contributes the feature "w:<token>" and, for tokens of three or
// more bytes, one "g:<trigram>" feature per trigram. A feature lands in bin
// fnv1a64(feature) % dimension with sign taken from the low bit of a second
// FNV-1a pass seeded with a different basis. Repeated features accumulate
// (term frequency) and the result is L2-normalised.
class HashedNgramEncoder final : public CaptionEncoder {
 public:
  explicit HashedNgramEncoder(std::size_t dimension = kHashedDimension);
  /// Throws ArgumentError for empty captions or captions with no tokens.
  CaptionEmbedding embed(const std::string& caption_id, std::string_view caption) const override;
  std::size_t dimension() const { return dimension_; }

 private:
  std::size_t dimension_;
};

// Precomputed vectors loaded from a CEMBv1 sidecar, looked up by image id.
class SidecarEncoder final : public CaptionEncoder {
 public:
  explicit SidecarEncoder(std::vector<CaptionEmbedding> embeddings);
  static SidecarEncoder from_file(const std::filesystem::path& path);
  /// Ignores the caption text. Throws ArgumentError for ids absent from the sidecar.
  CaptionEmbedding embed(const std::string& caption_id, std::string_view caption) const override;

 private:
  std::map<std::string, std::vector<float>, std::less<>> vectors_;
};

/// Built-in encoder with an empty caption id.
CaptionEmbedding embed_caption(std::string_view caption);

/// Throws ArgumentError on dimension mismatch. Result is clamped to [-1, 1].
double cosine_similarity(const CaptionEmbedding& a, const CaptionEmbedding& b);

// CEMBv1: "CEMBv1", u32 LE count, u32 LE dimension, then per item
// u16 LE id length, id bytes, dimension * f32 LE.
Bytes encode_sidecar(std::span<const CaptionEmbedding> embeddings);
std::vector<CaptionEmbedding> decode_sidecar(std::span<const std::uint8_t> bytes);

struct CompatibilitySets {
  double threshold = kDefaultSimilarityThreshold;
  // Ordered by descending similarity, ties by ascending id.
  std::map<std::string, std::vector<std::string>> candidates;

  /// Empty for ids without partners or unknown ids.
  const std::vector<std::string>& of(const std::string& image_id) const;
};

/// Pairs (i, j), i != j, with cosine_similarity > t_c become mutual candidates.
/// t_c == 0 disables the filter so every pair is compatible. Output is
/// independent of `threads` (0 selects hardware concurrency).
CompatibilitySets build_compatible_sets(std::span<const CaptionEmbedding> embeddings, double t_c,
                                        unsigned threads = 0);

/// Embeds the captions of the train split in split order.
std::vector<CaptionEmbedding> embed_train_captions(const CountingDataset& dataset,
                                                   const CaptionEncoder& encoder);

/// Pairs file: JSON object id -> [candidate ids].
std::string serialize_pairs(const CompatibilitySets& sets);
CompatibilitySets deserialize_pairs(std::string_view text, double threshold);

}  // namespace countaug
