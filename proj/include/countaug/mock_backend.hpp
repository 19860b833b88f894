// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "countaug/image.hpp"
#include "countaug/protocol.hpp"

namespace countaug {

inline constexpr const char* kMockBackendId = "countaug-mock-v1";
inline constexpr int kMockDiskRadius = 4;
// Per-channel noise stays within +/- this many 8-bit levels.
inline constexpr int kMockNoiseAmplitude = 4;
inline constexpr double kMockPeakMinHeight = 0.01;
inline constexpr double kMockPeakMinSeparation = 5.0;

Rgb mock_background_color(std::string_view caption);
/// Background hue rotated by 180 degrees.
Rgb mock_disk_color(std::string_view caption);

/// Object centres the mock draws: the point hint if present, otherwise the
/// peaks of the density conditioning.
std::vector<Point> mock_object_centres(const GenerationRequest& request, const DensityMap& density);

/// Deterministic stand-in generator: caption-hashed background, one filled
/// disk per object centre, seeded per-pixel noise. Throws MalformedRequestError.
RgbImage mock_render_image(const GenerationRequest& request);
GenerationResponse mock_render(const GenerationRequest& request);

struct HttpReply {
  int status = 200;
  std::string body;
};

/// Request handling used by the server, exposed for direct testing.
HttpReply handle_generate(std::string_view body);
HttpReply handle_healthz();

using LogSink = std::function<void(std::string_view)>;

// HTTP front-end for the mock backend (POST /generate, GET /healthz).
// Handlers share no mutable state; the server runs on its own thread until
// stop() or destruction.
class MockServer {
 public:
  /// Binds immediately; port 0 picks a free port. Throws TransportError on bind failure.
  explicit MockServer(const std::string& host = "127.0.0.1", int port = 0, LogSink log = {});
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  int port() const;
  std::string endpoint() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace countaug
