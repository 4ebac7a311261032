#pragma once

#include <cmath>
#include <vector>

#include "cloudeye/feature_map.hpp"
#include "cloudeye/frame.hpp"
#include "cloudeye/geometry.hpp"
#include "cloudeye/rng.hpp"

namespace cloudeye::testing {

inline Frame solid_frame(std::int64_t id, int w, int h, std::uint8_t r,
                         std::uint8_t g, std::uint8_t b) {
  Frame f;
  f.id = id;
  f.width = w;
  f.height = h;
  f.pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto* p = f.px(x, y);
      p[0] = r;
      p[1] = g;
      p[2] = b;
    }
  }
  return f;
}

inline Frame noise_frame(std::int64_t id, int w, int h, std::uint64_t seed) {
  Frame f = solid_frame(id, w, h, 0, 0, 0);
  Rng rng(seed);
  for (auto& px : f.pixels) px = static_cast<std::uint8_t>(rng.uniform_int(0, 256));
  return f;
}

// Rasterization oracle for IoU: counts subpixel samples inside each box.
inline double iou_raster_oracle(const BoundingBox& a, const BoundingBox& b,
                                int samples_per_px = 4) {
  const double lo_x = std::min(a.x_min, b.x_min) - 1;
  const double hi_x = std::max(a.x_max, b.x_max) + 1;
  const double lo_y = std::min(a.y_min, b.y_min) - 1;
  const double hi_y = std::max(a.y_max, b.y_max) + 1;
  const double step = 1.0 / samples_per_px;
  long in_a = 0, in_b = 0, in_both = 0;
  for (double y = lo_y + step / 2; y < hi_y; y += step) {
    for (double x = lo_x + step / 2; x < hi_x; x += step) {
      const bool ia = x >= a.x_min && x < a.x_max && y >= a.y_min && y < a.y_max;
      const bool ib = x >= b.x_min && x < b.x_max && y >= b.y_min && y < b.y_max;
      in_a += ia;
      in_b += ib;
      in_both += ia && ib;
    }
  }
  const long uni = in_a + in_b - in_both;
  return uni == 0 ? 0.0 : static_cast<double>(in_both) / uni;
}

// a one-layer feature map with every cell vector set by the caller
inline FeatureMap planted_map(std::int64_t frame_id, int grid_w, int grid_h,
                              int stride, int channels, float fill = 0.0f) {
  FeatureMap fmap;
  fmap.frame_id = frame_id;
  FeatureLayer layer;
  layer.stride = stride;
  layer.channels = channels;
  layer.grid_w = grid_w;
  layer.grid_h = grid_h;
  layer.data.assign(static_cast<std::size_t>(grid_w) * grid_h * channels, fill);
  fmap.layers.push_back(std::move(layer));
  return fmap;
}

inline void set_cell(FeatureMap& fmap, int layer, int u, int v,
                     const std::vector<float>& vec) {
  float* p = fmap.layers[layer].at(u, v);
  for (std::size_t c = 0; c < vec.size(); ++c) p[c] = vec[c];
}

inline std::vector<float> random_vec(Rng& rng, int channels, double scale = 1.0) {
  std::vector<float> v(channels);
  for (auto& x : v) x = static_cast<float>(rng.normal() * scale);
  return v;
}

}  // namespace cloudeye::testing
