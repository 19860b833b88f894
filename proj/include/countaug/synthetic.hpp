// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

#include "countaug/dataset.hpp"
#include "countaug/eval.hpp"

namespace countaug {

// Desk-scale corpus with well-separated points and captions drawn from a
// small family of templates so that related captions are mutually similar.
struct SyntheticCorpusOptions {
  std::size_t images = 50;
  std::uint32_t width = 192;
  std::uint32_t height = 192;
  std::uint32_t min_count = 1;
  std::uint32_t max_count = 50;  // image i holds min_count + i % (max - min + 1) points
  double min_separation = 12.0;
  std::uint64_t seed = 7;
};

/// Every image goes to the train split. Throws ArgumentError if the points
/// cannot be placed at the requested separation.
CountingDataset make_synthetic_corpus(const SyntheticCorpusOptions& options);

struct MockFidelityOptions {
  SyntheticCorpusOptions corpus;
  std::uint32_t epochs = 1;
  double sigma = 2.0;
};

/// Desk-scale evaluator: builds the corpus, compatibility sets, plan and an
/// epoch manifest for the config, renders every augmented entry with the mock
/// backend in-process and scores blob_count against the conditioning's
/// density_count (real entries score density_count against the point count).
EvalResult evaluate_mock_fidelity(const SweepConfig& config, const MockFidelityOptions& options);
Evaluator make_mock_fidelity_evaluator(MockFidelityOptions options = {});

}  // namespace countaug
