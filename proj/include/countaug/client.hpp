// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "countaug/density.hpp"
#include "countaug/protocol.hpp"
#include "countaug/schedule.hpp"
#include "countaug/store.hpp"

namespace countaug {

// Transient failures (connection errors, timeouts, 5xx, 408, 429) are retried
// with exponential backoff; 400 and contract violations are not.
struct RetryPolicy {
  std::uint32_t max_attempts = 4;
  std::chrono::milliseconds initial_backoff{100};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds max_backoff{5000};
  std::chrono::milliseconds timeout{120000};

  std::chrono::milliseconds backoff_before(std::uint32_t attempt) const;
};

/// Sends one request to `<endpoint>/generate` and returns a validated response.
/// Throws MalformedRequestError, ProtocolViolationError, TimeoutError or TransportError.
GenerationResponse generate(const std::string& endpoint, const GenerationRequest& request,
                            const RetryPolicy& retry = {});

/// GET /healthz; true when it answers 200 with status "ok".
bool check_health(const std::string& endpoint, std::chrono::milliseconds timeout = std::chrono::seconds(5));

GenerationRequest make_request(const PlannedItem& item, const DensityMap& density,
                               double guidance_scale = kDefaultGuidanceScale,
                               std::uint32_t steps = kDefaultSteps);

struct ExecutionOptions {
  std::uint32_t concurrency = 4;
  RetryPolicy retry;
  double guidance_scale = kDefaultGuidanceScale;
  std::uint32_t steps = kDefaultSteps;
  // Items already in the store are not regenerated.
  bool skip_existing = false;
};

// Resolves the conditioning of a planned item.
using DensitySource = std::function<DensityMap(const PlannedItem&)>;
// Optional point hints for mock backends.
using PointSource = std::function<std::vector<Point>(const PlannedItem&)>;

struct ItemOutcome {
  bool ok = false;
  bool skipped = false;
  std::string backend_id;
  std::string error;
};

struct ExecutionReport {
  // Indexed like plan.items regardless of completion order.
  std::vector<ItemOutcome> outcomes;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;
};

/// Runs every plan item against the backend with bounded concurrency and
/// writes successful results to the store. Per-item failures are reported,
/// not thrown.
ExecutionReport execute_plan(const AugmentationPlan& plan, const std::string& endpoint,
                             const DensitySource& densities, AugmentationStore& store,
                             const ExecutionOptions& options = {},
                             const PointSource& hints = {});

}  // namespace countaug
