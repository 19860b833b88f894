// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#include "countaug/eval.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>
#include <thread>

#include "countaug/error.hpp"
#include "countaug/util.hpp"
#include "json.hpp"

namespace countaug {

namespace {

void check_pairs(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) throw ArgumentError("metrics: length mismatch");
  if (predicted.empty()) throw ArgumentError("metrics: empty input");
}

double hue_distance(double a, double b) {
  const double d = std::fabs(a - b);
  return std::min(d, 360.0 - d);
}

}  // namespace

double mae(std::span<const double> predicted, std::span<const double> truth) {
  check_pairs(predicted, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) sum += std::fabs(predicted[i] - truth[i]);
  return sum / static_cast<double>(predicted.size());
}

double rmse(std::span<const double> predicted, std::span<const double> truth) {
  check_pairs(predicted, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - truth[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

CountMetrics trimmed_metrics(std::span<const double> predicted, std::span<const double> truth,
                             std::size_t trim) {
  check_pairs(predicted, truth);
  if (trim >= predicted.size()) throw ArgumentError("trimmed_metrics: trimming every item");
  std::vector<std::size_t> order(predicted.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::fabs(predicted[a] - truth[a]) < std::fabs(predicted[b] - truth[b]);
  });
  order.resize(order.size() - trim);
  std::sort(order.begin(), order.end());
  std::vector<double> p, t;
  for (const auto i : order) {
    p.push_back(predicted[i]);
    t.push_back(truth[i]);
  }
  return {mae(p, t), rmse(p, t), p.size()};
}

double dominant_hue(const RgbImage& image) {
  std::array<std::size_t, 360> histogram{};
  for (std::uint32_t y = 0; y < image.height; ++y) {
    for (std::uint32_t x = 0; x < image.width; ++x) {
      const auto bin = static_cast<std::size_t>(rgb_hue(image.at(x, y))) % 360;
      ++histogram[bin];
    }
  }
  return static_cast<double>(std::max_element(histogram.begin(), histogram.end()) - histogram.begin()) + 0.5;
}

std::vector<Blob> find_blobs(const RgbImage& image) {
  const std::size_t w = image.width, h = image.height;
  if (w == 0 || h == 0) return {};
  const double background = dominant_hue(image);
  std::vector<std::uint8_t> foreground(w * h, 0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double hue = rgb_hue(image.at(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)));
      foreground[y * w + x] = hue_distance(hue, background) > kBlobHueThreshold ? 1 : 0;
    }
  }
  std::vector<Blob> blobs;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < w * h; ++start) {
    if (!foreground[start]) continue;
    foreground[start] = 0;
    stack.push_back(start);
    Blob blob;
    double sum_x = 0, sum_y = 0;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const std::size_t x = p % w, y = p / w;
      ++blob.pixels;
      sum_x += static_cast<double>(x);
      sum_y += static_cast<double>(y);
      auto visit = [&](std::size_t q) {
        if (foreground[q]) {
          foreground[q] = 0;
          stack.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
    }
    if (blob.pixels < kBlobMinPixels) continue;
    blob.centroid_x = sum_x / static_cast<double>(blob.pixels);
    blob.centroid_y = sum_y / static_cast<double>(blob.pixels);
    blobs.push_back(blob);
  }
  return blobs;
}

std::size_t blob_count(const RgbImage& image) { return find_blobs(image).size(); }

std::string_view axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kTc: return "tc";
    case SweepAxis::kPc: return "pc";
    case SweepAxis::kM: return "M";
    case SweepAxis::kP0: return "p0";
  }
  return "unknown";
}

std::optional<SweepAxis> parse_axis(std::string_view name) {
  if (name == "tc") return SweepAxis::kTc;
  if (name == "pc") return SweepAxis::kPc;
  if (name == "M" || name == "m") return SweepAxis::kM;
  if (name == "p0") return SweepAxis::kP0;
  return std::nullopt;
}

std::map<std::string, std::string> SweepConfig::as_map() const {
  return {{"t_c", format_double(t_c)},
          {"p_c", format_double(p_c)},
          {"M", std::to_string(m)},
          {"p_0", format_double(p_0)},
          {"seed", std::to_string(seed)}};
}

SweepConfig SweepConfig::with(SweepAxis axis, double value) const {
  SweepConfig out = *this;
  auto unit = [&](const char* name) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw ArgumentError(std::string(name) + " must lie in [0, 1]");
    }
    return value;
  };
  switch (axis) {
    case SweepAxis::kTc: out.t_c = unit("t_c"); break;
    case SweepAxis::kPc: out.p_c = unit("p_c"); break;
    case SweepAxis::kP0: out.p_0 = unit("p_0"); break;
    case SweepAxis::kM:
      if (!(value >= 1.0) || value != std::floor(value) || value > 1e6) {
        throw ArgumentError("M must be a positive integer");
      }
      out.m = static_cast<std::uint32_t>(value);
      break;
  }
  return out;
}

std::vector<SweepRow> run_sweep(SweepAxis axis, std::span<const double> values,
                                const SweepConfig& fixed, const Evaluator& evaluator,
                                unsigned parallel) {
  if (values.empty()) throw ArgumentError("run_sweep: empty value list");
  std::vector<SweepRow> rows(values.size());
  auto run_one = [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.axis = axis;
    row.value = values[i];
    try {
      row.config = fixed.with(axis, values[i]);
      EvalResult result = evaluator(row.config);
      result.config = row.config.as_map();
      row.result = std::move(result);
    } catch (const std::exception& e) {
      row.result.reset();
      row.error = e.what();
    }
  };
  if (parallel <= 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < parallel; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) run_one(i);
      });
    }
  }
  return rows;
}

std::vector<SweepCsvRow> to_csv_rows(std::span<const SweepRow> rows) {
  std::vector<SweepCsvRow> out;
  for (const auto& row : rows) {
    SweepCsvRow csv;
    csv.axis = std::string(axis_name(row.axis));
    csv.value = row.value;
    csv.status = std::string(row.status());
    if (row.result) {
      csv.split = row.result->split;
      csv.mae = row.result->mae;
      csv.rmse = row.result->rmse;
      csv.n = row.result->n;
    }
    out.push_back(std::move(csv));
  }
  return out;
}

std::string write_sweep_csv(std::span<const SweepCsvRow> rows) {
  std::string out = std::string(kSweepCsvHeader) + "\n";
  for (const auto& r : rows) {
    if (r.split.find_first_of(",\n\"") != std::string::npos) {
      throw ArgumentError("split names may not contain commas, quotes or newlines");
    }
    out += r.axis + "," + format_double(r.value) + "," + r.split + "," +
           (r.mae ? format_double(*r.mae) : "") + "," + (r.rmse ? format_double(*r.rmse) : "") +
           "," + std::to_string(r.n) + "," + r.status + "\n";
  }
  return out;
}

namespace {

double parse_double_field(std::string_view field) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw FormatError("sweep CSV: bad number '" + std::string(field) + "'");
  }
  return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                         : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

std::vector<SweepCsvRow> parse_sweep_csv(std::string_view text) {
  std::vector<SweepCsvRow> rows;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (header) {
      if (line != kSweepCsvHeader) throw FormatError("sweep CSV: unexpected header");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 7) throw FormatError("sweep CSV: expected 7 fields");
    SweepCsvRow row;
    row.axis = std::string(f[0]);
    row.value = parse_double_field(f[1]);
    row.split = std::string(f[2]);
    if (!f[3].empty()) row.mae = parse_double_field(f[3]);
    if (!f[4].empty()) row.rmse = parse_double_field(f[4]);
    const auto [ptr, ec] = std::from_chars(f[5].data(), f[5].data() + f[5].size(), row.n);
    if (ec != std::errc{} || ptr != f[5].data() + f[5].size()) {
      throw FormatError("sweep CSV: bad count '" + std::string(f[5]) + "'");
    }
    row.status = std::string(f[6]);
    rows.push_back(std::move(row));
  }
  if (header) throw FormatError("sweep CSV: missing header");
  return rows;
}

Evaluator make_command_evaluator(std::string command_template) {
  return [command_template](const SweepConfig& config) {
    std::string command = command_template;
    const std::array<std::pair<std::string, std::string>, 5> substitutions = {{
        {"{tc}", format_double(config.t_c)},
        {"{pc}", format_double(config.p_c)},
        {"{M}", std::to_string(config.m)},
        {"{p0}", format_double(config.p_0)},
        {"{seed}", std::to_string(config.seed)},
    }};
    for (const auto& [key, value] : substitutions) {
      for (std::size_t at = command.find(key); at != std::string::npos;
           at = command.find(key, at + value.size())) {
        command.replace(at, key.size(), value);
      }
    }
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(command.c_str(), "r"), pclose);
    if (!pipe) throw Error("cannot start evaluator command: " + command);
    std::string output;
    std::array<char, 4096> buffer{};
    while (const std::size_t n = std::fread(buffer.data(), 1, buffer.size(), pipe.get())) {
      output.append(buffer.data(), n);
    }
    const int status = pclose(pipe.release());
    if (status != 0) throw Error("evaluator command failed with status " + std::to_string(status));
    while (!output.empty() && (output.back() == '\n' || output.back() == '\r')) output.pop_back();
    const std::size_t last_break = output.rfind('\n');
    const std::string last_line =
        last_break == std::string::npos ? output : output.substr(last_break + 1);
    try {
      const auto doc = nlohmann::json::parse(last_line);
      EvalResult result;
      result.split = doc.value("split", "val");
      result.mae = doc.at("mae").get<double>();
      result.rmse = doc.at("rmse").get<double>();
      result.n = doc.at("n").get<std::size_t>();
      if (result.n == 0) throw Error("evaluator reported n = 0");
      return result;
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("evaluator output is not a metrics JSON line: ") + e.what());
    }
  };
}

}  // namespace countaug
