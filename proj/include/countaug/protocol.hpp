// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "countaug/dataset.hpp"
#include "countaug/density.hpp"
#include "countaug/error.hpp"
#include "countaug/image.hpp"
#include "countaug/util.hpp"

namespace countaug {

inline constexpr double kDefaultGuidanceScale = 2.0;
inline constexpr std::uint32_t kDefaultSteps = 20;

// Request rejected as malformed (HTTP 400); never retried.
class MalformedRequestError : public Error {
 public:
  using Error::Error;
};

// Backend answered but the answer breaks the contract (bad image, wrong size, seed echo).
class ProtocolViolationError : public Error {
 public:
  using Error::Error;
};

// Backend unreachable or kept failing after every retry.
class TransportError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public TransportError {
 public:
  using TransportError::TransportError;
};

// POST /generate body. Binary fields travel as base64 in JSON.
struct GenerationRequest {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::string caption;
  Bytes density;  // DMAPv1
  double guidance_scale = kDefaultGuidanceScale;
  std::uint32_t steps = kDefaultSteps;
  std::uint64_t seed = 0;
  // Object centres; a hint for mock backends, ignored by real ones.
  std::optional<std::vector<Point>> points;

  friend bool operator==(const GenerationRequest&, const GenerationRequest&) = default;
};

struct GenerationResponse {
  Bytes image;  // 8-bit RGB PNG
  std::string backend_id;
  std::uint64_t seed_echo = 0;

  friend bool operator==(const GenerationResponse&, const GenerationResponse&) = default;
};

std::string request_to_json(const GenerationRequest& request);
/// Throws MalformedRequestError for non-JSON bodies, missing or mistyped fields.
GenerationRequest request_from_json(std::string_view body);

/// Checks steps, guidance and that the density decodes to width x height.
/// Returns the decoded density; throws MalformedRequestError otherwise.
DensityMap validate_request(const GenerationRequest& request);

std::string response_to_json(const GenerationResponse& response);
/// Throws ProtocolViolationError.
GenerationResponse response_from_json(std::string_view body);

/// Checks the response against the request that produced it and returns the
/// decoded image. Throws ProtocolViolationError.
RgbImage validate_response(const GenerationRequest& request, const GenerationResponse& response);

}  // namespace countaug
