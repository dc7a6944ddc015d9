#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fashionrag/color.hpp"
#include "fashionrag/image.hpp"

namespace fashionrag::detect {

struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double area() const noexcept { return (x_max - x_min) * (y_max - y_min); }
  bool valid() const noexcept { return x_min < x_max && y_min < y_max; }

  friend bool operator==(const Box&, const Box&) = default;
};

struct Detection {
  std::string class_name;
  Box box;
  double confidence = 0.0;
  std::optional<color::ColorDescriptor> colors;
};

struct DetectorConfig {
  double theta_conf = 0.35;
  double theta_iou = 0.6;
};

// Intersection over union; 0 for disjoint or degenerate boxes.
double iou(const Box& a, const Box& b) noexcept;

// Keeps detections with confidence >= theta_conf, preserving order.
std::vector<Detection> filter_detections(const std::vector<Detection>& dets,
                                         const DetectorConfig& cfg);

// Class-wise greedy NMS. Output is in processing order: confidence descending,
// ties by input order.
std::vector<Detection> nms(const std::vector<Detection>& dets, double theta_iou);

// Pixel rectangle covered by the box after clamping to the image.
// Throws degenerate_input when nothing of the box lies inside the image.
PixelRect crop_rect(int image_width, int image_height, const Box& box);
ImageRegion crop(const Image& image, const Box& box);

// One line of detections.jsonl.
struct DetectionsEntry {
  std::string image_id;
  std::string image_path;
  std::vector<Detection> detections;
};

Detection detection_from_json(const nlohmann::json& j);
nlohmann::json detection_to_json(const Detection& det);
DetectionsEntry entry_from_json(const nlohmann::json& j);
std::vector<Detection> detections_from_json(const nlohmann::json& array);

DetectionsEntry parse_detections_line(std::string_view line);
std::vector<DetectionsEntry> load_detections(const std::filesystem::path& path);

}  // namespace fashionrag::detect
