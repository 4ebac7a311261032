#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cloudeye {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Axis-aligned box in continuous pixel coordinates, corner form.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  Point center() const { return {(x_min + x_max) * 0.5, (y_min + y_max) * 0.5}; }
  bool valid() const { return x_min < x_max && y_min < y_max; }

  BoundingBox clamped(double frame_w, double frame_h) const;
  static BoundingBox from_center(double cx, double cy, double w, double h);
};

// intersection over union, in [0,1]
double iou(const BoundingBox& a, const BoundingBox& b);

// corner-wise min/max hull of two boxes
BoundingBox union_rect(const BoundingBox& a, const BoundingBox& b);

// true iff the intersection has positive area
bool overlaps(const BoundingBox& a, const BoundingBox& b);

enum class Source : std::uint8_t { Edge, Cloud, Mined, Tracked };

const char* to_string(Source s);

struct Detection {
  BoundingBox box;
  int class_id = 0;
  double confidence = 1.0;
  Source source = Source::Edge;
};

struct GtBox {
  BoundingBox box;
  int class_id = 0;
};

struct GroundTruth {
  std::int64_t frame_id = 0;
  std::vector<GtBox> boxes;
};

// Greedy max-IoU one-to-one matching between two box lists; returns index
// pairs (a_idx, b_idx), deterministic tie-breaking.
std::vector<std::pair<int, int>> greedy_iou_match(
    const std::vector<BoundingBox>& a, const std::vector<BoundingBox>& b,
    double iou_threshold);

}  // namespace cloudeye
