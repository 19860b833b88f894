// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#include "countaug/protocol.hpp"

#include <cmath>

#include "countaug/image.hpp"
#include "json.hpp"

namespace countaug {

using nlohmann::json;

std::string request_to_json(const GenerationRequest& request) {
  json doc = {{"width", request.width},
              {"height", request.height},
              {"caption", request.caption},
              {"density", base64_encode(request.density)},
              {"guidance_scale", request.guidance_scale},
              {"steps", request.steps},
              {"seed", request.seed}};
  if (request.points) {
    json points = json::array();
    for (const auto& p : *request.points) points.push_back({p.x, p.y});
    doc["points"] = std::move(points);
  }
  return doc.dump();
}

GenerationRequest request_from_json(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw MalformedRequestError(std::string("request body is not JSON: ") + e.what());
  }
  if (!doc.is_object()) throw MalformedRequestError("request body must be a JSON object");
  GenerationRequest request;
  try {
    request.width = doc.at("width").get<std::uint32_t>();
    request.height = doc.at("height").get<std::uint32_t>();
    request.caption = doc.at("caption").get<std::string>();
    request.density = base64_decode(doc.at("density").get<std::string>());
    request.guidance_scale = doc.value("guidance_scale", kDefaultGuidanceScale);
    request.steps = doc.value("steps", kDefaultSteps);
    request.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("points") && !doc["points"].is_null()) {
      std::vector<Point> points;
      for (const auto& p : doc["points"]) {
        points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      }
      request.points = std::move(points);
    }
  } catch (const json::exception& e) {
    throw MalformedRequestError(std::string("request field error: ") + e.what());
  } catch (const FormatError& e) {
    throw MalformedRequestError(std::string("density field: ") + e.what());
  }
  return request;
}

DensityMap validate_request(const GenerationRequest& request) {
  if (request.width == 0 || request.height == 0) {
    throw MalformedRequestError("width and height must be positive");
  }
  if (request.steps < 1) throw MalformedRequestError("steps must be at least 1");
  if (!(request.guidance_scale > 0.0) || !std::isfinite(request.guidance_scale)) {
    throw MalformedRequestError("guidance_scale must be positive");
  }
  DensityMap density;
  try {
    density = decode_dmap(request.density);
  } catch (const FormatError& e) {
    throw MalformedRequestError(std::string("density: ") + e.what());
  }
  if (density.width != request.width || density.height != request.height) {
    throw MalformedRequestError("density dimensions do not match width x height");
  }
  if (request.points) {
    for (const auto& p : *request.points) {
      if (!(p.x >= 0 && p.x < request.width && p.y >= 0 && p.y < request.height)) {
        throw MalformedRequestError("point hint outside the image");
      }
    }
  }
  return density;
}

std::string response_to_json(const GenerationResponse& response) {
  const json doc = {{"image", base64_encode(response.image)},
                    {"backend_id", response.backend_id},
                    {"seed_echo", response.seed_echo}};
  return doc.dump();
}

GenerationResponse response_from_json(std::string_view body) {
  GenerationResponse response;
  try {
    const json doc = json::parse(body);
    response.image = base64_decode(doc.at("image").get<std::string>());
    response.backend_id = doc.at("backend_id").get<std::string>();
    response.seed_echo = doc.at("seed_echo").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ProtocolViolationError(std::string("malformed response: ") + e.what());
  } catch (const FormatError& e) {
    throw ProtocolViolationError(std::string("malformed response image: ") + e.what());
  }
  return response;
}

RgbImage validate_response(const GenerationRequest& request, const GenerationResponse& response) {
  if (response.seed_echo != request.seed) {
    throw ProtocolViolationError("seed_echo does not match the request seed");
  }
  if (response.backend_id.empty()) throw ProtocolViolationError("response has no backend_id");
  RgbImage image;
  try {
    image = decode_png(response.image);
  } catch (const FormatError& e) {
    throw ProtocolViolationError(std::string("response image: ") + e.what());
  }
  if (image.width != request.width || image.height != request.height) {
    throw ProtocolViolationError("response image is " + std::to_string(image.width) + "x" +
                                 std::to_string(image.height) + ", requested " +
                                 std::to_string(request.width) + "x" +
                                 std::to_string(request.height));
  }
  return image;
}

}  // namespace countaug
