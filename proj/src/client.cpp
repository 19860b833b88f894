// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#include "countaug/client.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace countaug {

std::chrono::milliseconds RetryPolicy::backoff_before(std::uint32_t attempt) const {
  if (attempt <= 1) return std::chrono::milliseconds(0);
  const double scaled = static_cast<double>(initial_backoff.count()) *
                        std::pow(backoff_multiplier, static_cast<double>(attempt - 2));
  const double capped = std::min(scaled, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<std::int64_t>(capped));
}

namespace {

void configure(httplib::Client& client, std::chrono::milliseconds timeout) {
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  client.set_keep_alive(false);
}

bool is_timeout(httplib::Error error) {
  return error == httplib::Error::ConnectionTimeout || error == httplib::Error::Read ||
         error == httplib::Error::Write;
}

bool is_transient_status(int status) { return status >= 500 || status == 408 || status == 429; }

std::string error_message(const std::string& body) {
  try {
    const auto doc = nlohmann::json::parse(body);
    if (doc.is_object() && doc.contains("error")) return doc["error"].get<std::string>();
  } catch (const nlohmann::json::exception&) {
  }
  return body;
}

}  // namespace

GenerationResponse generate(const std::string& endpoint, const GenerationRequest& request,
                            const RetryPolicy& retry) {
  const std::string body = request_to_json(request);
  httplib::Client client(endpoint);
  if (!client.is_valid()) throw TransportError("invalid endpoint: " + endpoint);
  configure(client, retry.timeout);

  const std::uint32_t attempts = std::max<std::uint32_t>(1, retry.max_attempts);
  std::string last_failure;
  bool last_was_timeout = false;
  for (std::uint32_t attempt = 1; attempt <= attempts; ++attempt) {
    std::this_thread::sleep_for(retry.backoff_before(attempt));
    auto result = client.Post("/generate", body, "application/json");
    if (!result) {
      last_was_timeout = is_timeout(result.error());
      last_failure = httplib::to_string(result.error());
      continue;
    }
    const int status = result->status;
    if (status == 200) {
      GenerationResponse response = response_from_json(result->body);
      validate_response(request, response);
      return response;
    }
    if (status == 400) throw MalformedRequestError("backend rejected request: " + error_message(result->body));
    if (!is_transient_status(status)) {
      throw ProtocolViolationError("unexpected HTTP status " + std::to_string(status) + ": " +
                                   error_message(result->body));
    }
    last_was_timeout = status == 408;
    last_failure = "HTTP " + std::to_string(status) + ": " + error_message(result->body);
  }
  const std::string message = "generate failed after " + std::to_string(attempts) +
                              " attempt(s) against " + endpoint + ": " + last_failure;
  if (last_was_timeout) throw TimeoutError(message);
  throw TransportError(message);
}

bool check_health(const std::string& endpoint, std::chrono::milliseconds timeout) {
  httplib::Client client(endpoint);
  if (!client.is_valid()) return false;
  configure(client, timeout);
  auto result = client.Get("/healthz");
  if (!result || result->status != 200) return false;
  try {
    return nlohmann::json::parse(result->body).value("status", "") == "ok";
  } catch (const nlohmann::json::exception&) {
    return false;
  }
}

GenerationRequest make_request(const PlannedItem& item, const DensityMap& density,
                               double guidance_scale, std::uint32_t steps) {
  GenerationRequest request;
  request.width = density.width;
  request.height = density.height;
  request.caption = item.caption_used;
  request.density = encode_dmap(density);
  request.guidance_scale = guidance_scale;
  request.steps = steps;
  request.seed = item.seed;
  return request;
}

ExecutionReport execute_plan(const AugmentationPlan& plan, const std::string& endpoint,
                             const DensitySource& densities, AugmentationStore& store,
                             const ExecutionOptions& options, const PointSource& hints) {
  ExecutionReport report;
  report.outcomes.resize(plan.items.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < plan.items.size(); i = next++) {
      const PlannedItem& item = plan.items[i];
      ItemOutcome& outcome = report.outcomes[i];
      try {
        if (options.skip_existing && store.contains(item.image_id, item.aug_index)) {
          outcome.ok = true;
          outcome.skipped = true;
          outcome.backend_id = store.backend_id(item.image_id, item.aug_index);
          continue;
        }
        GenerationRequest request =
            make_request(item, densities(item), options.guidance_scale, options.steps);
        if (hints) request.points = hints(item);
        const GenerationResponse response = generate(endpoint, request, options.retry);
        store.write(item, response.image, response.backend_id);
        outcome.ok = true;
        outcome.backend_id = response.backend_id;
      } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.error = e.what();
      }
    }
  };

  const std::uint32_t workers = std::clamp<std::uint32_t>(
      options.concurrency, 1, static_cast<std::uint32_t>(std::max<std::size_t>(1, plan.items.size())));
  {
    std::vector<std::jthread> pool;
    for (std::uint32_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  for (const auto& outcome : report.outcomes) {
    if (outcome.skipped) ++report.skipped;
    if (outcome.ok) {
      ++report.succeeded;
    } else {
      ++report.failed;
    }
  }
  return report;
}

}  // namespace countaug
