#include "cloudeye/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cloudeye {

namespace {

void accumulate_grid(const std::vector<BoundingBox>& boxes, int frame_w,
                     int frame_h, int g, bool shifted, std::vector<float>& out) {
  out.assign(static_cast<std::size_t>(4) * g * g, 0.0f);
  if (boxes.empty()) return;

  const double cell_w = double(frame_w) / g;
  const double cell_h = double(frame_h) / g;
  const double frame_area = double(frame_w) * frame_h;

  std::vector<double> wsum(g * g, 0.0), sx(g * g, 0.0), sy(g * g, 0.0),
      area(g * g, 0.0);
  std::vector<int> count(g * g, 0);

  for (const auto& b : boxes) {
    const auto c = b.center();
    const double off = shifted ? 0.5 : 0.0;
    const int u = std::clamp(static_cast<int>(std::floor(c.x / cell_w + off)), 0, g - 1);
    const int v = std::clamp(static_cast<int>(std::floor(c.y / cell_h + off)), 0, g - 1);
    const double w = std::max(b.area(), 1e-9);
    const int idx = v * g + u;
    wsum[idx] += w;
    sx[idx] += w * c.x;
    sy[idx] += w * c.y;
    area[idx] += b.area();
    ++count[idx];
  }

  const double total = static_cast<double>(boxes.size());
  for (int i = 0; i < g * g; ++i) {
    if (count[i] == 0) continue;
    out[i * 4 + 0] = static_cast<float>(std::clamp(sx[i] / wsum[i] / frame_w, 0.0, 1.0));
    out[i * 4 + 1] = static_cast<float>(std::clamp(sy[i] / wsum[i] / frame_h, 0.0, 1.0));
    out[i * 4 + 2] = static_cast<float>(std::clamp(area[i] / frame_area, 0.0, 1.0));
    out[i * 4 + 3] = static_cast<float>(count[i] / total);
  }
}

}  // namespace

std::vector<float> DistributionEmbedding::concat() const {
  std::vector<float> v;
  v.reserve(base.size() + shifted.size());
  v.insert(v.end(), base.begin(), base.end());
  v.insert(v.end(), shifted.begin(), shifted.end());
  return v;
}

DistributionEmbedding embed(const std::vector<BoundingBox>& boxes, int frame_w,
                            int frame_h, int grid_g) {
  if (grid_g < 2) throw std::invalid_argument("embed: grid_g must be >= 2");
  DistributionEmbedding e;
  e.grid_g = grid_g;
  e.empty_flag = boxes.empty();
  accumulate_grid(boxes, frame_w, frame_h, grid_g, false, e.base);
  accumulate_grid(boxes, frame_w, frame_h, grid_g, true, e.shifted);
  return e;
}

EmbeddingMetric fit_metric(const std::vector<DistributionEmbedding>& set) {
  EmbeddingMetric m;
  if (set.empty()) return m;
  const std::size_t dim = set[0].concat().size();
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  for (const auto& e : set) {
    const auto v = e.concat();
    for (std::size_t j = 0; j < dim; ++j) mean[j] += v[j];
  }
  for (auto& x : mean) x /= static_cast<double>(set.size());
  for (const auto& e : set) {
    const auto v = e.concat();
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = v[j] - mean[j];
      var[j] += d * d;
    }
  }
  m.inv_std.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const double v = std::max(var[j] / static_cast<double>(set.size()), 1e-6);
    m.inv_std[j] = static_cast<float>(1.0 / std::sqrt(v));
  }
  return m;
}

std::vector<float> scaled_vector(const DistributionEmbedding& e,
                                 const EmbeddingMetric& metric) {
  std::vector<float> v = e.concat();
  const float norm = 1.0f / std::sqrt(2.0f);  // the /2 of the combined metric
  for (std::size_t j = 0; j < v.size(); ++j) {
    const float s = j < metric.inv_std.size() ? metric.inv_std[j] : 1.0f;
    v[j] *= s * norm;
  }
  return v;
}

double embedding_distance(const DistributionEmbedding& a,
                          const DistributionEmbedding& b,
                          const EmbeddingMetric& metric) {
  if (a.grid_g != b.grid_g) {
    throw std::invalid_argument("embedding_distance: grid size mismatch");
  }
  const auto va = scaled_vector(a, metric);
  const auto vb = scaled_vector(b, metric);
  double d = 0.0;
  for (std::size_t j = 0; j < va.size(); ++j) {
    const double diff = double(va[j]) - double(vb[j]);
    d += diff * diff;
  }
  return d;
}

}  // namespace cloudeye
