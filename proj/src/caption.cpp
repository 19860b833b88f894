// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#include "countaug/caption.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <set>
#include <thread>

#include "countaug/error.hpp"
#include "json.hpp"

namespace countaug {

namespace {

constexpr std::uint64_t kSignBasis = 0x84222325cbf29ce4ULL;
constexpr char kCembMagic[6] = {'C', 'E', 'M', 'B', 'v', '1'};

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80;
}

std::vector<std::string> tokenize(std::string_view caption) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char raw : caption) {
    auto c = static_cast<unsigned char>(raw);
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    if (is_token_byte(c)) {
      current.push_back(static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::size_t> nonzero_indices(std::span<const float> v) {
  std::vector<std::size_t> nz;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] != 0.0f) nz.push_back(k);
  }
  return nz;
}

// Ascending-index accumulation over the non-zeros of `a`; skipping zeros of
// `a` leaves the double sum bitwise unchanged, so the sparse and dense paths agree.
double sparse_dot(std::span<const std::size_t> nz_a, std::span<const float> a,
                  std::span<const float> b) {
  double sum = 0.0;
  for (const std::size_t k : nz_a) sum += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  return sum;
}

double cosine_from_parts(double dot, double norm_a, double norm_b) {
  if (norm_a == 0.0 || norm_b == 0.0) throw ArgumentError("cosine_similarity: zero vector");
  return std::clamp(dot / (norm_a * norm_b), -1.0, 1.0);
}

double l2_norm(std::span<const std::size_t> nz, std::span<const float> v) {
  return std::sqrt(sparse_dot(nz, v, v));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::vector<float> normalized(std::vector<double> accum) {
  double norm_sq = 0.0;
  for (const double v : accum) norm_sq += v * v;
  if (norm_sq == 0.0) throw ArgumentError("embedding has zero norm");
  const double inv = 1.0 / std::sqrt(norm_sq);
  std::vector<float> out(accum.size());
  for (std::size_t k = 0; k < accum.size(); ++k) out[k] = static_cast<float>(accum[k] * inv);
  return out;
}

}  // namespace

HashedNgramEncoder::HashedNgramEncoder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw ArgumentError("HashedNgramEncoder: dimension must be positive");
}

CaptionEmbedding HashedNgramEncoder::embed(const std::string& caption_id,
                                           std::string_view caption) const {
  if (caption.empty()) throw ArgumentError("embed_caption: empty caption");
  const auto tokens = tokenize(caption);
  if (tokens.empty()) throw ArgumentError("embed_caption: caption has no alphanumeric tokens");

  std::vector<double> accum(dimension_, 0.0);
  auto add_feature = [&](const std::string& feature) {
    const std::uint64_t bin = fnv1a64(feature) % dimension_;
    const bool negative = (fnv1a64(feature, kSignBasis) & 1U) != 0;
    accum[bin] += negative ? -1.0 : 1.0;
  };
  for (const auto& token : tokens) {
    add_feature("w:" + token);
    for (std::size_t i = 0; i + 3 <= token.size(); ++i) add_feature("g:" + token.substr(i, 3));
  }
  try {
    return {caption_id, normalized(std::move(accum))};
  } catch (const ArgumentError&) {
    throw ArgumentError("embed_caption: hashed features cancel out for '" + std::string(caption) + "'");
  }
}

CaptionEmbedding embed_caption(std::string_view caption) {
  static const HashedNgramEncoder encoder;
  return encoder.embed("", caption);
}

SidecarEncoder::SidecarEncoder(std::vector<CaptionEmbedding> embeddings) {
  for (auto& e : embeddings) {
    if (e.vector.empty()) throw ArgumentError("sidecar embedding for " + e.caption_id + " is empty");
    std::vector<double> accum(e.vector.begin(), e.vector.end());
    auto vec = normalized(std::move(accum));
    if (!vectors_.emplace(e.caption_id, std::move(vec)).second) {
      throw ArgumentError("duplicate sidecar id " + e.caption_id);
    }
  }
}

SidecarEncoder SidecarEncoder::from_file(const std::filesystem::path& path) {
  return SidecarEncoder(decode_sidecar(read_file(path)));
}

CaptionEmbedding SidecarEncoder::embed(const std::string& caption_id, std::string_view) const {
  const auto it = vectors_.find(caption_id);
  if (it == vectors_.end()) throw ArgumentError("no sidecar embedding for " + caption_id);
  return {caption_id, it->second};
}

double cosine_similarity(const CaptionEmbedding& a, const CaptionEmbedding& b) {
  if (a.vector.size() != b.vector.size()) {
    throw ArgumentError("cosine_similarity: dimension mismatch");
  }
  const auto nz_a = nonzero_indices(a.vector);
  const auto nz_b = nonzero_indices(b.vector);
  return cosine_from_parts(sparse_dot(nz_a, a.vector, b.vector), l2_norm(nz_a, a.vector),
                           l2_norm(nz_b, b.vector));
}

Bytes encode_sidecar(std::span<const CaptionEmbedding> embeddings) {
  const std::size_t dimension = embeddings.empty() ? 0 : embeddings.front().vector.size();
  Bytes out(std::begin(kCembMagic), std::end(kCembMagic));
  put_u32(out, static_cast<std::uint32_t>(embeddings.size()));
  put_u32(out, static_cast<std::uint32_t>(dimension));
  for (const auto& e : embeddings) {
    if (e.vector.size() != dimension) throw ArgumentError("sidecar: inconsistent dimensions");
    if (e.caption_id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ArgumentError("sidecar: id too long");
    }
    const auto len = static_cast<std::uint16_t>(e.caption_id.size());
    out.push_back(static_cast<std::uint8_t>(len & 0xff));
    out.push_back(static_cast<std::uint8_t>(len >> 8));
    out.insert(out.end(), e.caption_id.begin(), e.caption_id.end());
    for (const float v : e.vector) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

std::vector<CaptionEmbedding> decode_sidecar(std::span<const std::uint8_t> bytes) {
  std::size_t offset = 0;
  auto need = [&](std::size_t n) {
    if (bytes.size() - offset < n) throw FormatError("CEMBv1: truncated payload");
  };
  auto u32 = [&] {
    need(4);
    const std::uint32_t v = static_cast<std::uint32_t>(bytes[offset]) |
                            static_cast<std::uint32_t>(bytes[offset + 1]) << 8 |
                            static_cast<std::uint32_t>(bytes[offset + 2]) << 16 |
                            static_cast<std::uint32_t>(bytes[offset + 3]) << 24;
    offset += 4;
    return v;
  };
  if (bytes.size() < sizeof(kCembMagic) ||
      std::memcmp(bytes.data(), kCembMagic, sizeof(kCembMagic)) != 0) {
    throw FormatError("CEMBv1: bad magic");
  }
  offset = sizeof(kCembMagic);
  const std::uint32_t count = u32();
  const std::uint32_t dimension = u32();
  std::vector<CaptionEmbedding> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    need(2);
    const std::size_t len = bytes[offset] | static_cast<std::size_t>(bytes[offset + 1]) << 8;
    offset += 2;
    need(len);
    CaptionEmbedding e;
    e.caption_id.assign(reinterpret_cast<const char*>(bytes.data() + offset), len);
    offset += len;
    need(static_cast<std::size_t>(dimension) * 4);
    e.vector.resize(dimension);
    for (auto& v : e.vector) v = std::bit_cast<float>(u32());
    out.push_back(std::move(e));
  }
  if (offset != bytes.size()) throw FormatError("CEMBv1: trailing bytes after payload");
  return out;
}

const std::vector<std::string>& CompatibilitySets::of(const std::string& image_id) const {
  static const std::vector<std::string> kEmpty;
  const auto it = candidates.find(image_id);
  return it == candidates.end() ? kEmpty : it->second;
}

CompatibilitySets build_compatible_sets(std::span<const CaptionEmbedding> embeddings, double t_c,
                                        unsigned threads) {
  if (!(t_c >= 0.0 && t_c <= 1.0)) throw ArgumentError("build_compatible_sets: t_c outside [0, 1]");
  const std::size_t n = embeddings.size();
  {
    std::set<std::string_view> ids;
    for (const auto& e : embeddings) {
      if (!ids.insert(e.caption_id).second) {
        throw ArgumentError("build_compatible_sets: duplicate id " + e.caption_id);
      }
      if (e.vector.size() != embeddings.front().vector.size()) {
        throw ArgumentError("build_compatible_sets: dimension mismatch");
      }
    }
  }
  const bool no_filter = t_c == 0.0;

  std::vector<std::vector<std::size_t>> nz(n);
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    nz[i] = nonzero_indices(embeddings[i].vector);
    norms[i] = l2_norm(nz[i], embeddings[i].vector);
  }

  struct Match {
    std::size_t other;
    double similarity;
  };
  // upper[i] holds matches j > i; filled independently per row.
  std::vector<std::vector<Match>> upper(n);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < n; i += stride) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double sim = cosine_from_parts(
            sparse_dot(nz[i], embeddings[i].vector, embeddings[j].vector), norms[i], norms[j]);
        if (no_filter || sim > t_c) upper[i].push_back({j, sim});
      }
    }
  };
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }

  std::vector<std::vector<Match>> full(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& m : upper[i]) {
      full[i].push_back(m);
      full[m.other].push_back({i, m.similarity});
    }
  }
  CompatibilitySets sets;
  sets.threshold = t_c;
  for (std::size_t i = 0; i < n; ++i) {
    auto& matches = full[i];
    std::sort(matches.begin(), matches.end(), [&](const Match& a, const Match& b) {
      if (a.similarity != b.similarity) return a.similarity > b.similarity;
      return embeddings[a.other].caption_id < embeddings[b.other].caption_id;
    });
    auto& list = sets.candidates[embeddings[i].caption_id];
    list.reserve(matches.size());
    for (const auto& m : matches) list.push_back(embeddings[m.other].caption_id);
  }
  return sets;
}

std::vector<CaptionEmbedding> embed_train_captions(const CountingDataset& dataset,
                                                   const CaptionEncoder& encoder) {
  std::vector<CaptionEmbedding> out;
  for (const auto& id : dataset.ids(Split::kTrain)) {
    out.push_back(encoder.embed(id, dataset.record(id).caption));
  }
  return out;
}

std::string serialize_pairs(const CompatibilitySets& sets) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& [id, list] : sets.candidates) doc[id] = list;
  return doc.dump() + "\n";
}

CompatibilitySets deserialize_pairs(std::string_view text, double threshold) {
  CompatibilitySets sets;
  sets.threshold = threshold;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (!doc.is_object()) throw IoError("pairs file must map id to candidate list");
    for (const auto& [id, list] : doc.items()) {
      sets.candidates[id] = list.get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed pairs file: ") + e.what());
  }
  for (const auto& [id, list] : sets.candidates) {
    for (const auto& other : list) {
      if (other == id) throw ValidationError("pairs file lists " + id + " as its own candidate");
      const auto& back = sets.of(other);
      if (std::find(back.begin(), back.end(), id) == back.end()) {
        throw ValidationError("pairs file is not symmetric for " + id + " / " + other);
      }
    }
  }
  return sets;
}

}  // namespace countaug
