// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#include "countaug/mock_backend.hpp"

#include <cmath>
#include <sstream>
#include <thread>

#include "countaug/util.hpp"
#include "httplib.h"
#include "json.hpp"

namespace countaug {

namespace {

constexpr double kMockSaturation = 0.65;
constexpr double kMockValue = 0.8;

double caption_hue(std::string_view caption) {
  return static_cast<double>(mix64(fnv1a64(caption)) % 360);
}

std::uint8_t jitter(std::uint8_t channel, int offset) {
  return static_cast<std::uint8_t>(std::clamp(static_cast<int>(channel) + offset, 0, 255));
}

}  // namespace

Rgb mock_background_color(std::string_view caption) {
  return hsv_to_rgb(caption_hue(caption), kMockSaturation, kMockValue);
}

Rgb mock_disk_color(std::string_view caption) {
  return hsv_to_rgb(caption_hue(caption) + 180.0, kMockSaturation, kMockValue);
}

std::vector<Point> mock_object_centres(const GenerationRequest& request, const DensityMap& density) {
  if (request.points) return *request.points;
  return extract_peaks(density, kMockPeakMinHeight, kMockPeakMinSeparation);
}

RgbImage mock_render_image(const GenerationRequest& request) {
  const DensityMap density = validate_request(request);
  const Rgb background = mock_background_color(request.caption);
  const Rgb disk = mock_disk_color(request.caption);
  RgbImage image(request.width, request.height, background);

  const double r2 = kMockDiskRadius * kMockDiskRadius;
  for (const auto& c : mock_object_centres(request, density)) {
    const auto x0 = static_cast<std::int64_t>(std::floor(c.x - kMockDiskRadius));
    const auto y0 = static_cast<std::int64_t>(std::floor(c.y - kMockDiskRadius));
    for (std::int64_t y = std::max<std::int64_t>(0, y0);
         y <= std::min<std::int64_t>(request.height - 1, y0 + 2 * kMockDiskRadius + 1); ++y) {
      for (std::int64_t x = std::max<std::int64_t>(0, x0);
           x <= std::min<std::int64_t>(request.width - 1, x0 + 2 * kMockDiskRadius + 1); ++x) {
        const double dx = static_cast<double>(x) - c.x, dy = static_cast<double>(y) - c.y;
        if (dx * dx + dy * dy <= r2) {
          image.set(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), disk);
        }
      }
    }
  }

  SeedStream noise(request.seed);
  const auto span = static_cast<std::uint64_t>(2 * kMockNoiseAmplitude + 1);
  for (auto& channel : image.pixels) {
    channel = jitter(channel, static_cast<int>(noise.uniform_index(span)) - kMockNoiseAmplitude);
  }
  return image;
}

GenerationResponse mock_render(const GenerationRequest& request) {
  return {encode_png(mock_render_image(request)), kMockBackendId, request.seed};
}

HttpReply handle_generate(std::string_view body) {
  try {
    const GenerationRequest request = request_from_json(body);
    return {200, response_to_json(mock_render(request))};
  } catch (const MalformedRequestError& e) {
    return {400, nlohmann::json{{"error", e.what()}}.dump()};
  } catch (const std::exception& e) {
    return {500, nlohmann::json{{"error", e.what()}}.dump()};
  }
}

HttpReply handle_healthz() {
  return {200, nlohmann::json{{"status", "ok"}, {"backend_id", kMockBackendId}}.dump()};
}

struct MockServer::Impl {
  httplib::Server server;
  std::string host;
  int port = 0;
  std::thread thread;
};

MockServer::MockServer(const std::string& host, int port, LogSink log)
    : impl_(std::make_unique<Impl>()) {
  impl_->host = host;
  auto& server = impl_->server;
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    const HttpReply reply = handle_healthz();
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
  server.Post("/generate", [log](const httplib::Request& req, httplib::Response& res) {
    const HttpReply reply = handle_generate(req.body);
    if (log) {
      std::ostringstream line;
      line << "POST /generate status=" << reply.status;
      // Guidance and steps are not used by the mock; logged for parity audits.
      if (reply.status == 200) {
        const auto request = request_from_json(req.body);
        line << " seed=" << request.seed << " guidance=" << request.guidance_scale
             << " steps=" << request.steps << " size=" << request.width << "x" << request.height;
      }
      log(line.str());
    }
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });

  if (port == 0) {
    impl_->port = server.bind_to_any_port(host);
    if (impl_->port <= 0) throw TransportError("mock server: cannot bind " + host);
  } else {
    if (!server.bind_to_port(host, port)) {
      throw TransportError("mock server: cannot bind " + host + ":" + std::to_string(port));
    }
    impl_->port = port;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  server.wait_until_ready();
}

MockServer::~MockServer() { stop(); }

int MockServer::port() const { return impl_->port; }

std::string MockServer::endpoint() const {
  return "http://" + impl_->host + ":" + std::to_string(impl_->port);
}

void MockServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace countaug
