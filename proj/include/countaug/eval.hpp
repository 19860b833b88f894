// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "countaug/image.hpp"

namespace countaug {

/// Mean absolute error. Throws ArgumentError on length mismatch or empty input.
double mae(std::span<const double> predicted, std::span<const double> truth);
/// Root mean squared error. Same errors as mae.
double rmse(std::span<const double> predicted, std::span<const double> truth);

struct CountMetrics {
  double mae = 0;
  double rmse = 0;
  std::size_t n = 0;
};

/// Metrics after dropping the `trim` items with the largest absolute error.
CountMetrics trimmed_metrics(std::span<const double> predicted, std::span<const double> truth,
                             std::size_t trim);

struct EvalResult {
  std::string split;
  double mae = 0;
  double rmse = 0;
  std::size_t n = 0;
  std::map<std::string, std::string> config;
};

// Connected region of foreground pixels.
struct Blob {
  std::size_t pixels = 0;
  double centroid_x = 0;
  double centroid_y = 0;
};

inline constexpr double kBlobHueThreshold = 90.0;
inline constexpr std::size_t kBlobMinPixels = 4;

/// Most frequent hue (1-degree bins) across the image.
double dominant_hue(const RgbImage& image);

/// 4-connected components of pixels whose circular hue distance from the
/// dominant hue exceeds kBlobHueThreshold, dropping components smaller than
/// kBlobMinPixels. Ordered by first pixel in row-major order.
std::vector<Blob> find_blobs(const RgbImage& image);
std::size_t blob_count(const RgbImage& image);

enum class SweepAxis { kTc, kPc, kM, kP0 };

std::string_view axis_name(SweepAxis axis);
std::optional<SweepAxis> parse_axis(std::string_view name);

// Fully resolved hyperparameters of one run.
struct SweepConfig {
  double t_c = 0.7;
  double p_c = 0.5;
  std::uint32_t m = 10;
  double p_0 = 0.5;
  std::uint64_t seed = 42;

  std::map<std::string, std::string> as_map() const;
  /// Throws ArgumentError when `value` is invalid for `axis`.
  SweepConfig with(SweepAxis axis, double value) const;
};

using Evaluator = std::function<EvalResult(const SweepConfig&)>;

struct SweepRow {
  SweepAxis axis = SweepAxis::kTc;
  double value = 0;
  SweepConfig config;
  std::optional<EvalResult> result;  // empty when the evaluator failed
  std::string error;

  std::string_view status() const { return result ? "ok" : "failed"; }
};

/// One row per value in input order. Evaluator exceptions mark the row failed
/// and the sweep continues. `parallel` > 1 runs configs concurrently.
std::vector<SweepRow> run_sweep(SweepAxis axis, std::span<const double> values,
                                const SweepConfig& fixed, const Evaluator& evaluator,
                                unsigned parallel = 1);

// CSV columns: axis,value,split,mae,rmse,n,status
struct SweepCsvRow {
  std::string axis;
  double value = 0;
  std::string split;
  std::optional<double> mae;
  std::optional<double> rmse;
  std::size_t n = 0;
  std::string status;

  friend bool operator==(const SweepCsvRow&, const SweepCsvRow&) = default;
};

inline constexpr const char* kSweepCsvHeader = "axis,value,split,mae,rmse,n,status";

std::vector<SweepCsvRow> to_csv_rows(std::span<const SweepRow> rows);
std::string write_sweep_csv(std::span<const SweepCsvRow> rows);
/// Throws FormatError on a wrong header or malformed line.
std::vector<SweepCsvRow> parse_sweep_csv(std::string_view text);

/// Runs `command_template` through the shell with {tc} {pc} {M} {p0} {seed}
/// substituted; the last stdout line must be JSON with mae, rmse, n and
/// optionally split.
Evaluator make_command_evaluator(std::string command_template);

}  // namespace countaug
