// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <set>

#include "countaug/error.hpp"
#include "countaug/feed.hpp"
#include "countaug/store.hpp"
#include "doctest.h"
#include "json.hpp"
#include "stats.hpp"
#include "support.hpp"

using namespace countaug;

namespace {

// Pretends every planned augmentation exists, except those listed in `missing`.
class FakeIndex final : public AugmentationIndex {
 public:
  std::set<std::pair<std::string, std::uint32_t>> missing;
  bool contains(const std::string& id, std::uint32_t idx) const override {
    return !missing.count({id, idx});
  }
  std::filesystem::path image_path(const std::string& id, std::uint32_t idx) const override {
    return std::filesystem::path("aug") / id / (std::to_string(idx) + ".png");
  }
};

struct Corpus {
  CountingDataset dataset;
  AugmentationPlan plan;
};

// Baseline-only plan over `n` images; candidate lists are irrelevant to the feed draw.
Corpus baseline_corpus(std::size_t n, std::uint32_t m, std::uint64_t seed = 5) {
  std::mt19937_64 rng(seed);
  Corpus c;
  c.dataset = countaug::testing::caption_dataset(rng, n);
  c.plan = build_plan(c.dataset, CompatibilitySets{}, m, 0.0, seed);
  return c;
}

}  // namespace

TEST_CASE("p_0 = 0 keeps every image real") {
  const auto c = baseline_corpus(50, 10);
  FakeIndex store;
  for (std::uint32_t epoch = 0; epoch < 20; ++epoch) {
    for (const auto& e : epoch_manifest(c.dataset, c.plan, store, 0.0, epoch, 42)) {
      REQUIRE(e.source == ImageSource::kReal);
      REQUIRE_FALSE(e.aug_index.has_value());
      REQUIRE_FALSE(e.boxes_may_mismatch);
    }
  }
  // Without replacement nothing needs to exist in the store, nor in the plan.
  store.missing.insert({c.dataset.ids(Split::kTrain)[0], 0});
  CHECK_NOTHROW(epoch_manifest(c.dataset, c.plan, store, 0.0, 0, 42));
  CHECK_NOTHROW(epoch_manifest(c.dataset, AugmentationPlan{}, store, 0.0, 0, 42));
}

TEST_CASE("p_0 = 1 with M = 1 always picks augmentation 0") {
  const auto c = baseline_corpus(50, 1);
  FakeIndex store;
  for (std::uint32_t epoch = 0; epoch < 20; ++epoch) {
    for (const auto& e : epoch_manifest(c.dataset, c.plan, store, 1.0, epoch, 42)) {
      REQUIRE(e.source == ImageSource::kAugmented);
      REQUIRE(e.aug_index == 0U);
      REQUIRE(e.image_path == store.image_path(e.image_id, 0).string());
    }
  }
}

TEST_CASE("p_0 = 0.5 over 3659 images and 20 epochs") {
  const std::size_t images = 3659;
  const std::uint32_t epochs = 20;
  const auto c = baseline_corpus(images, 10);
  FakeIndex store;
  std::map<std::string, unsigned> per_image;
  std::array<std::size_t, 10> per_index{};
  std::size_t augmented = 0;
  for (std::uint32_t epoch = 0; epoch < epochs; ++epoch) {
    for (const auto& e : epoch_manifest(c.dataset, c.plan, store, 0.5, epoch, 42)) {
      if (e.source != ImageSource::kAugmented) continue;
      ++augmented;
      ++per_image[e.image_id];
      ++per_index[*e.aug_index];
    }
  }
  const double fraction = static_cast<double>(augmented) / static_cast<double>(images * epochs);
  MESSAGE("pooled synthetic fraction " << fraction);
  CHECK(fraction >= 0.48);
  CHECK(fraction <= 0.52);

  // Per-image two-sided binomial tests at alpha = 0.001. A handful of
  // rejections is expected by chance alone, so the number of rejections is
  // itself checked against its own binomial distribution.
  std::size_t rejected = 0;
  for (const auto& id : c.dataset.ids(Split::kTrain)) {
    rejected += countaug::testing::binomial_two_sided_p(per_image[id], epochs, 0.5) <= 0.001;
  }
  const double per_image_rate = countaug::testing::binomial_rejection_probability(epochs, 0.5, 0.001);
  CHECK(per_image_rate == doctest::Approx(422.0 / 1048576.0));
  const std::size_t allowed = countaug::testing::binomial_upper_quantile(images, per_image_rate, 0.001);
  MESSAGE("per-image rejections " << rejected << " (allowed " << allowed << ")");
  CHECK(rejected <= allowed);

  const auto chi = countaug::testing::chi_squared_uniform(per_index, 0.001);
  MESSAGE("aug_index chi^2 " << chi.statistic << " (critical " << chi.critical << ")");
  CHECK(chi.pass());
}

TEST_CASE("aug_index choice is uniform for a single image") {
  const auto c = baseline_corpus(1, 7);
  FakeIndex store;
  std::array<std::size_t, 7> counts{};
  for (std::uint32_t epoch = 0; epoch < 14000; ++epoch) {
    ++counts[*epoch_manifest(c.dataset, c.plan, store, 1.0, epoch, 3)[0].aug_index];
  }
  CHECK(countaug::testing::chi_squared_uniform(counts, 0.001).pass());
}

TEST_CASE("statistical oracles behave on known cases") {
  CHECK(countaug::testing::binomial_two_sided_p(10, 20, 0.5) == doctest::Approx(1.0));
  CHECK(countaug::testing::binomial_two_sided_p(0, 20, 0.5) == doctest::Approx(2.0 / 1048576.0));
  CHECK(countaug::testing::binomial_two_sided_p(3, 20, 0.5) == doctest::Approx(2.0 * 1351 / 1048576.0));
  const std::array<std::size_t, 4> flat{100, 100, 100, 100};
  CHECK(countaug::testing::chi_squared_uniform(flat, 0.001).statistic == 0.0);
  const std::array<std::size_t, 4> skewed{400, 0, 0, 0};
  CHECK_FALSE(countaug::testing::chi_squared_uniform(skewed, 0.001).pass());
  CHECK(countaug::testing::chi_squared_uniform(flat, 0.001).critical == doctest::Approx(16.266).epsilon(1e-3));
}

TEST_CASE("ground truth is never replaced") {
  std::mt19937_64 rng(6);
  const auto dataset = countaug::testing::caption_dataset(rng, 40);
  const auto compat = build_compatible_sets(embed_train_captions(dataset, HashedNgramEncoder()), 0.0);
  const auto plan = build_plan(dataset, compat, 6, 0.5, 9);
  FakeIndex store;
  const FeedLayout layout{"real", "gt"};
  bool saw_mismatch = false;
  for (std::uint32_t epoch = 0; epoch < 10; ++epoch) {
    for (const auto& e : epoch_manifest(dataset, plan, store, 0.7, epoch, 1, layout)) {
      const auto& record = dataset.record(e.image_id);
      REQUIRE(e.density_path == (std::filesystem::path("gt") / density_ref_for(e.image_id)).string());
      REQUIRE(e.exemplar_boxes == record.exemplar_boxes);
      if (e.source == ImageSource::kReal) {
        REQUIRE(e.image_path == (std::filesystem::path("real") / e.image_id).string());
        REQUIRE(e.caption_used == record.caption);
        REQUIRE_FALSE(e.boxes_may_mismatch);
      } else {
        const auto& train = dataset.ids(Split::kTrain);
        const auto pos = static_cast<std::size_t>(std::find(train.begin(), train.end(), e.image_id) -
                                                  train.begin());
        const auto& item = plan.items[pos * 6 + *e.aug_index];
        REQUIRE(item.image_id == e.image_id);
        REQUIRE(e.caption_used == item.caption_used);
        REQUIRE(e.boxes_may_mismatch == (item.kind == AugmentationKind::kDiverse));
        saw_mismatch |= e.boxes_may_mismatch;
      }
    }
  }
  CHECK(saw_mismatch);
}

TEST_CASE("manifests are deterministic per epoch") {
  const auto c = baseline_corpus(100, 10);
  FakeIndex store;
  const auto hash = plan_hash(c.plan);
  CHECK(hash.size() == 64);
  auto text = [&](std::uint32_t epoch, std::uint64_t seed) {
    return serialize_manifest(epoch_manifest(c.dataset, c.plan, store, 0.5, epoch, seed), epoch, 0.5,
                              seed, hash);
  };
  CHECK(text(3, 42) == text(3, 42));
  CHECK(text(3, 42) != text(4, 42));
  CHECK(text(3, 42) != text(3, 43));
  CHECK(feed_seed(42, 3, "a") != feed_seed(42, 4, "a"));
  CHECK(feed_seed(42, 3, "a") != item_seed(42, "a", 3));

  const std::string manifest = text(2, 42);
  const auto header = nlohmann::json::parse(manifest.substr(0, manifest.find('\n')));
  CHECK(header["epoch"] == 2);
  CHECK(header["p_0"] == 0.5);
  CHECK(header["global_seed"] == 42);
  CHECK(header["plan_hash"] == hash);
  std::size_t lines = 0, real = 0;
  for (std::size_t pos = manifest.find('\n') + 1; pos < manifest.size(); pos = manifest.find('\n', pos) + 1) {
    const auto line = nlohmann::json::parse(manifest.substr(pos, manifest.find('\n', pos) - pos));
    ++lines;
    if (line["resolved_source"] == "real") {
      ++real;
      CHECK(line["aug_index"].is_null());
    } else {
      CHECK(line["resolved_source"] == "augmented");
      CHECK(line["aug_index"].is_number_unsigned());
    }
  }
  CHECK(lines == 100);
  CHECK(real > 0);
  CHECK(real < 100);
}

TEST_CASE("feed errors") {
  const auto c = baseline_corpus(20, 4);
  FakeIndex store;
  CHECK_THROWS_AS(epoch_manifest(c.dataset, c.plan, store, -0.1, 0, 1), ArgumentError);
  CHECK_THROWS_AS(epoch_manifest(c.dataset, c.plan, store, 1.5, 0, 1), ArgumentError);
  CHECK_THROWS_AS(epoch_manifest(c.dataset, AugmentationPlan{}, store, 0.5, 0, 1), ArgumentError);

  const auto& victim = c.dataset.ids(Split::kTrain)[7];
  store.missing.insert({victim, 2});
  try {
    epoch_manifest(c.dataset, c.plan, store, 0.01, 0, 1);
    FAIL("missing augmentation not reported");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find(victim + "/2") != std::string::npos);
  }
}

TEST_CASE("feed against a store on disk") {
  const auto c = baseline_corpus(5, 2);
  countaug::testing::TempDir dir("feed-store");
  AugmentationStore store(dir / "aug");
  CHECK_THROWS_AS(epoch_manifest(c.dataset, c.plan, store, 0.5, 0, 1), ValidationError);
  const Bytes png{0x89, 'P', 'N', 'G'};
  for (const auto& item : c.plan.items) store.write(item, png, "test-backend");
  const auto entries = epoch_manifest(c.dataset, c.plan, store, 1.0, 0, 1);
  for (const auto& e : entries) {
    CHECK(std::filesystem::exists(e.image_path));
    CHECK(store.backend_id(e.image_id, *e.aug_index) == "test-backend");
  }
}
