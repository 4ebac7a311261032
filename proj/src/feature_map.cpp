#include "cloudeye/feature_map.hpp"

#include <cmath>
#include <stdexcept>

#include "cloudeye/kernels.hpp"
#include "cloudeye/rng.hpp"

namespace cloudeye {

std::vector<float> projection_matrix(const ExtractorConfig& cfg, int layer_index,
                                     int stride) {
  const int side = 2 * stride;
  const int dim = side * side * 3;
  std::vector<float> proj(static_cast<std::size_t>(cfg.channels) * dim);
  Rng rng(derive_seed(cfg.seed, 0x70726f6aull, static_cast<std::uint64_t>(layer_index)));
  const float scale = 1.0f / std::sqrt(static_cast<float>(dim));
  for (auto& w : proj) w = static_cast<float>(rng.normal()) * scale;
  return proj;
}

namespace {

template <typename ProjectFn>
FeatureMap extract_impl(const Frame& frame, const ExtractorConfig& cfg,
                        ProjectFn&& project) {
  if (!frame.valid()) throw std::invalid_argument("extract_features: bad frame");
  for (std::size_t i = 1; i < cfg.strides.size(); ++i) {
    if (cfg.strides[i] <= cfg.strides[i - 1]) {
      throw std::invalid_argument("extract_features: strides must increase");
    }
  }
  FeatureMap fmap;
  fmap.frame_id = frame.id;
  fmap.layers.reserve(cfg.strides.size());
  for (std::size_t li = 0; li < cfg.strides.size(); ++li) {
    FeatureLayer layer;
    layer.stride = cfg.strides[li];
    layer.channels = cfg.channels;
    layer.grid_w = (frame.width + layer.stride - 1) / layer.stride;
    layer.grid_h = (frame.height + layer.stride - 1) / layer.stride;
    layer.data.resize(static_cast<std::size_t>(layer.grid_w) * layer.grid_h *
                      layer.channels);
    const auto proj = projection_matrix(cfg, static_cast<int>(li), layer.stride);
    project(frame, proj, layer);
    fmap.layers.push_back(std::move(layer));
  }
  return fmap;
}

}  // namespace

FeatureMap extract_features(const Frame& frame, const ExtractorConfig& cfg) {
  return extract_impl(frame, cfg, kernels::project_patches);
}

FeatureMap extract_features_serial(const Frame& frame, const ExtractorConfig& cfg) {
  return extract_impl(frame, cfg, kernels::project_patches_serial);
}

}  // namespace cloudeye
