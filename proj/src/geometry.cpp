#include "cloudeye/geometry.hpp"

#include <algorithm>

namespace cloudeye {

BoundingBox BoundingBox::clamped(double frame_w, double frame_h) const {
  BoundingBox b;
  b.x_min = std::clamp(x_min, 0.0, frame_w);
  b.y_min = std::clamp(y_min, 0.0, frame_h);
  b.x_max = std::clamp(x_max, 0.0, frame_w);
  b.y_max = std::clamp(y_max, 0.0, frame_h);
  return b;
}

BoundingBox BoundingBox::from_center(double cx, double cy, double w, double h) {
  return {cx - w * 0.5, cy - h * 0.5, cx + w * 0.5, cy + h * 0.5};
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

BoundingBox union_rect(const BoundingBox& a, const BoundingBox& b) {
  return {std::min(a.x_min, b.x_min), std::min(a.y_min, b.y_min),
          std::max(a.x_max, b.x_max), std::max(a.y_max, b.y_max)};
}

bool overlaps(const BoundingBox& a, const BoundingBox& b) {
  return std::min(a.x_max, b.x_max) > std::max(a.x_min, b.x_min) &&
         std::min(a.y_max, b.y_max) > std::max(a.y_min, b.y_min);
}

std::vector<std::pair<int, int>> greedy_iou_match(
    const std::vector<BoundingBox>& a, const std::vector<BoundingBox>& b,
    double iou_threshold) {
  struct Cand {
    double iou;
    int i, j;
  };
  std::vector<Cand> cands;
  for (int i = 0; i < static_cast<int>(a.size()); ++i) {
    for (int j = 0; j < static_cast<int>(b.size()); ++j) {
      const double v = iou(a[i], b[j]);
      if (v >= iou_threshold) cands.push_back({v, i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.iou != y.iou) return x.iou > y.iou;
    if (x.i != y.i) return x.i < y.i;
    return x.j < y.j;
  });
  std::vector<bool> a_used(a.size(), false), b_used(b.size(), false);
  std::vector<std::pair<int, int>> out;
  for (const auto& c : cands) {
    if (a_used[c.i] || b_used[c.j]) continue;
    a_used[c.i] = b_used[c.j] = true;
    out.emplace_back(c.i, c.j);
  }
  return out;
}

const char* to_string(Source s) {
  switch (s) {
    case Source::Edge: return "edge";
    case Source::Cloud: return "cloud";
    case Source::Mined: return "mined";
    case Source::Tracked: return "tracked";
  }
  return "unknown";
}

}  // namespace cloudeye
