#pragma once

#include <cstdint>
#include <vector>

#include "cloudeye/frame.hpp"

namespace cloudeye {

// One dense feature grid. Cell (u,v) is anchored at pixel (u*stride, v*stride).
struct FeatureLayer {
  int stride = 1;
  int channels = 0;
  int grid_w = 0;
  int grid_h = 0;
  std::vector<float> data;  // grid_h * grid_w * channels

  const float* at(int u, int v) const {
    return data.data() + (static_cast<std::size_t>(v) * grid_w + u) * channels;
  }
  float* at(int u, int v) {
    return data.data() + (static_cast<std::size_t>(v) * grid_w + u) * channels;
  }
};

// Multi-scale feature stack, strides strictly increasing.
struct FeatureMap {
  std::int64_t frame_id = -1;
  std::vector<FeatureLayer> layers;

  bool empty() const { return layers.empty(); }
};

struct ExtractorConfig {
  std::vector<int> strides{4, 8, 16};
  int channels = 16;
  std::uint64_t seed = 1;
};

// Deterministic stand-in for DNN feature extraction: each cell's vector is a
// fixed seeded random projection of the pixel patch of side 2*stride centered
// at the cell anchor. Identical patches yield identical vectors, and content
// shifted by exactly one stride shifts interior cells by one cell.
FeatureMap extract_features(const Frame& frame, const ExtractorConfig& cfg);
FeatureMap extract_features_serial(const Frame& frame, const ExtractorConfig& cfg);

// Projection matrix for one layer (channels x patch_dim), fixed per (seed, layer).
std::vector<float> projection_matrix(const ExtractorConfig& cfg, int layer_index,
                                     int stride);

}  // namespace cloudeye
