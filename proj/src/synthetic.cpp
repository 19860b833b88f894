// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#include "countaug/synthetic.hpp"

#include <array>
#include <cstdio>
#include <map>
#include <string_view>

#include "countaug/caption.hpp"
#include "countaug/client.hpp"
#include "countaug/density.hpp"
#include "countaug/error.hpp"
#include "countaug/feed.hpp"
#include "countaug/mock_backend.hpp"
#include "countaug/schedule.hpp"
#include "countaug/util.hpp"

namespace countaug {

namespace {

struct CaptionFamily {
  std::string_view prefix;
  std::array<std::string_view, 4> objects;
  std::string_view middle;
  std::array<std::string_view, 3> places;
};

constexpr std::array<CaptionFamily, 5> kFamilies = {{
    {"a herd of", {"cows", "bisons", "sheep", "goats"}, "grazing in a", {"green field", "dry meadow", "snowy pasture"}},
    {"a bunch of", {"apples", "peaches", "oranges", "lemons"}, "piled in a", {"wicker basket", "wooden crate", "glass bowl"}},
    {"a tray of", {"macarons", "bread rolls", "cookies", "muffins"}, "cooling on a", {"kitchen counter", "baking sheet", "marble table"}},
    {"a box of", {"pens", "pencils", "markers", "crayons"}, "scattered on a", {"office desk", "notebook page", "school table"}},
    {"a flock of", {"pigeons", "seagulls", "sparrows", "ducks"}, "resting on a", {"stone wall", "city square", "sandy beach"}},
}};

constexpr std::array<std::string_view, 5> kColors = {"red", "brown", "white", "yellow", "dark"};

struct SyntheticCaption {
  std::string text;
  std::string category;
};

SyntheticCaption synthetic_caption(std::size_t index) {
  const auto& family = kFamilies[index % kFamilies.size()];
  const std::size_t k = index / kFamilies.size();
  const auto object = family.objects[k % family.objects.size()];
  const auto color = kColors[(k / family.objects.size()) % kColors.size()];
  const auto place =
      family.places[(k / (family.objects.size() * kColors.size())) % family.places.size()];
  return {std::string(family.prefix) + " " + std::string(color) + " " + std::string(object) + " " +
              std::string(family.middle) + " " + std::string(place),
          std::string(object)};
}

// Every planned augmentation counts as present; paths are symbolic.
class InMemoryIndex final : public AugmentationIndex {
 public:
  bool contains(const std::string&, std::uint32_t) const override { return true; }
  std::filesystem::path image_path(const std::string& image_id, std::uint32_t aug_index) const override {
    return std::filesystem::path("mem") / image_id / std::to_string(aug_index);
  }
};

}  // namespace

CountingDataset make_synthetic_corpus(const SyntheticCorpusOptions& options) {
  if (options.width == 0 || options.height == 0) throw ArgumentError("synthetic corpus: empty image");
  if (options.min_count > options.max_count) throw ArgumentError("synthetic corpus: min_count > max_count");
  CountingDataset dataset;
  SeedStream rng(mix64(options.seed));
  const double sep_sq = options.min_separation * options.min_separation;
  const std::uint32_t span = options.max_count - options.min_count + 1;
  for (std::size_t i = 0; i < options.images; ++i) {
    ImageRecord record;
    char id[32];
    std::snprintf(id, sizeof(id), "syn%05zu.jpg", i);
    record.image_id = id;
    record.width = options.width;
    record.height = options.height;
    record.split = Split::kTrain;
    const std::uint32_t count = options.min_count + static_cast<std::uint32_t>(i % span);
    std::size_t attempts = 0;
    while (record.points.size() < count) {
      if (++attempts > 200000) {
        throw ArgumentError("synthetic corpus: cannot place " + std::to_string(count) +
                            " points at the requested separation");
      }
      const Point p{rng.uniform01() * options.width, rng.uniform01() * options.height};
      bool clear = true;
      for (const auto& q : record.points) {
        const double dx = p.x - q.x, dy = p.y - q.y;
        if (dx * dx + dy * dy < sep_sq) {
          clear = false;
          break;
        }
      }
      if (clear) record.points.push_back(p);
    }
    for (std::size_t b = 0; b < std::min<std::size_t>(3, record.points.size()); ++b) {
      const Point& p = record.points[b];
      record.exemplar_boxes.push_back({std::max(0.0, p.x - 4.0), std::max(0.0, p.y - 4.0),
                                       std::min<double>(options.width, p.x + 4.0),
                                       std::min<double>(options.height, p.y + 4.0)});
    }
    auto caption = synthetic_caption(i);
    record.caption = std::move(caption.text);
    record.category = std::move(caption.category);
    dataset.split_lists[static_cast<std::size_t>(Split::kTrain)].push_back(record.image_id);
    dataset.records.emplace(record.image_id, std::move(record));
  }
  return dataset;
}

EvalResult evaluate_mock_fidelity(const SweepConfig& config, const MockFidelityOptions& options) {
  const CountingDataset dataset = make_synthetic_corpus(options.corpus);
  const HashedNgramEncoder encoder;
  const auto embeddings = embed_train_captions(dataset, encoder);
  const auto compat = build_compatible_sets(embeddings, config.t_c, 1);
  const AugmentationPlan plan = build_plan(dataset, compat, config.m, config.p_c, config.seed);

  std::map<std::pair<std::string, std::uint32_t>, const PlannedItem*> items;
  for (const auto& item : plan.items) items[{item.image_id, item.aug_index}] = &item;
  std::map<std::string, DensityMap> densities;
  auto density_of = [&](const std::string& id) -> const DensityMap& {
    auto it = densities.find(id);
    if (it == densities.end()) {
      it = densities.emplace(id, render_density(dataset.record(id), options.sigma)).first;
    }
    return it->second;
  };

  const InMemoryIndex index;
  std::vector<double> predicted, truth;
  for (std::uint32_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (const auto& entry : epoch_manifest(dataset, plan, index, config.p_0, epoch, config.seed)) {
      const DensityMap& density = density_of(entry.image_id);
      if (entry.source == ImageSource::kReal) {
        predicted.push_back(density_count(density));
        truth.push_back(static_cast<double>(dataset.record(entry.image_id).count()));
        continue;
      }
      const PlannedItem& item = *items.at({entry.image_id, *entry.aug_index});
      const RgbImage image = mock_render_image(make_request(item, density));
      predicted.push_back(static_cast<double>(blob_count(image)));
      truth.push_back(density_count(density));
    }
  }
  EvalResult result;
  result.split = "desk";
  result.mae = mae(predicted, truth);
  result.rmse = rmse(predicted, truth);
  result.n = predicted.size();
  result.config = config.as_map();
  return result;
}

Evaluator make_mock_fidelity_evaluator(MockFidelityOptions options) {
  return [options](const SweepConfig& config) { return evaluate_mock_fidelity(config, options); };
}

}  // namespace countaug
