#pragma once

#include <span>
#include <vector>

#include "cloudeye/geometry.hpp"

namespace cloudeye {

// Fixed-length summary of a 2-D box layout: a g x g grid of per-cell
// (weighted mean cx, weighted mean cy, total area, count) tuples, duplicated
// on a half-cell-offset grid so near-boundary boxes stay comparable.
struct DistributionEmbedding {
  int grid_g = 4;
  std::vector<float> base;     // 4*g*g
  std::vector<float> shifted;  // 4*g*g
  bool empty_flag = false;

  std::vector<float> concat() const;
  int dim() const { return 8 * grid_g * grid_g; }
};

DistributionEmbedding embed(const std::vector<BoundingBox>& boxes, int frame_w,
                            int frame_h, int grid_g);

// per-component inverse std over a fitted set, variance floored at 1e-6
struct EmbeddingMetric {
  std::vector<float> inv_std;  // over the concatenated vector
};

EmbeddingMetric fit_metric(const std::vector<DistributionEmbedding>& set);

// (d(base) + d(shifted)) / 2 with d the squared diagonal Mahalanobis, so the
// combined metric is a plain squared Euclidean over pre-scaled vectors.
double embedding_distance(const DistributionEmbedding& a,
                          const DistributionEmbedding& b,
                          const EmbeddingMetric& metric);

// scaled so that squared Euclidean distance equals embedding_distance
std::vector<float> scaled_vector(const DistributionEmbedding& e,
                                 const EmbeddingMetric& metric);

}  // namespace cloudeye
