#include "fashionrag/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fashionrag/error.hpp"
#include "fashionrag/text.hpp"

namespace fashionrag::detect {

double iou(const Box& a, const Box& b) noexcept {
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<Detection> filter_detections(const std::vector<Detection>& dets,
                                         const DetectorConfig& cfg) {
  std::vector<Detection> kept;
  std::copy_if(dets.begin(), dets.end(), std::back_inserter(kept),
               [&](const Detection& d) { return d.confidence >= cfg.theta_conf; });
  return kept;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double theta_iou) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });

  std::vector<Detection> kept;
  for (const std::size_t i : order) {
    const Detection& candidate = dets[i];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.class_name == candidate.class_name && iou(k.box, candidate.box) > theta_iou;
    });
    if (!suppressed) kept.push_back(candidate);
  }
  return kept;
}

PixelRect crop_rect(int image_width, int image_height, const Box& box) {
  const double x0 = std::clamp(box.x_min, 0.0, static_cast<double>(image_width));
  const double y0 = std::clamp(box.y_min, 0.0, static_cast<double>(image_height));
  const double x1 = std::clamp(box.x_max, 0.0, static_cast<double>(image_width));
  const double y1 = std::clamp(box.y_max, 0.0, static_cast<double>(image_height));
  PixelRect rect{static_cast<int>(std::floor(x0)), static_cast<int>(std::floor(y0)),
                 static_cast<int>(std::ceil(x1)), static_cast<int>(std::ceil(y1))};
  if (rect.area() == 0) {
    throw Error(ErrorCode::degenerate_input, "detection box lies outside the image");
  }
  return rect;
}

ImageRegion crop(const Image& image, const Box& box) {
  return ImageRegion(image, crop_rect(image.width(), image.height(), box));
}

Detection detection_from_json(const nlohmann::json& j) {
  try {
    Detection det;
    det.class_name = std::string(text::trim(j.at("class").get<std::string>()));
    const auto& b = j.at("box");
    if (!b.is_array() || b.size() != 4) {
      throw Error(ErrorCode::parse_error, "detection box must be [x_min, y_min, x_max, y_max]");
    }
    det.box = Box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    det.confidence = j.contains("conf") ? j.at("conf").get<double>() : 1.0;
    if (det.class_name.empty()) throw Error(ErrorCode::parse_error, "detection class is empty");
    if (!det.box.valid()) throw Error(ErrorCode::parse_error, "detection box has non-positive extent");
    if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
      throw Error(ErrorCode::parse_error, "detection confidence outside [0,1]");
    }
    return det;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed detection: ") + e.what());
  }
}

nlohmann::json detection_to_json(const Detection& det) {
  return nlohmann::json{{"class", det.class_name},
                        {"box", {det.box.x_min, det.box.y_min, det.box.x_max, det.box.y_max}},
                        {"conf", det.confidence}};
}

std::vector<Detection> detections_from_json(const nlohmann::json& array) {
  if (!array.is_array()) throw Error(ErrorCode::parse_error, "\"detections\" must be an array");
  std::vector<Detection> dets;
  dets.reserve(array.size());
  for (const auto& d : array) dets.push_back(detection_from_json(d));
  return dets;
}

DetectionsEntry entry_from_json(const nlohmann::json& j) {
  try {
    DetectionsEntry entry;
    entry.image_id = j.at("image_id").get<std::string>();
    entry.image_path = j.value("image_path", std::string{});
    entry.detections = detections_from_json(j.at("detections"));
    return entry;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed detections entry: ") + e.what());
  }
}

DetectionsEntry parse_detections_line(std::string_view line) {
  const auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::parse_error, "detections line is not a JSON object");
  }
  return entry_from_json(j);
}

std::vector<DetectionsEntry> load_detections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open detections file: " + path.string());
  std::vector<DetectionsEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      entries.push_back(parse_detections_line(line));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return entries;
}

}  // namespace fashionrag::detect
