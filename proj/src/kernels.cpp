#include "cloudeye/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdlib>

namespace cloudeye::kernels {

std::uint64_t abs_diff_sum_serial(std::span<const std::uint8_t> a,
                                  std::span<const std::uint8_t> b) {
  assert(a.size() == b.size());
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += static_cast<std::uint64_t>(std::abs(int(a[i]) - int(b[i])));
  }
  return sum;
}

std::uint64_t abs_diff_sum(std::span<const std::uint8_t> a,
                           std::span<const std::uint8_t> b) {
  assert(a.size() == b.size());
  const std::int64_t n = static_cast<std::int64_t>(a.size());
  std::uint64_t sum = 0;
#pragma omp parallel for reduction(+ : sum)
  for (std::int64_t i = 0; i < n; ++i) {
    sum += static_cast<std::uint64_t>(std::abs(int(a[i]) - int(b[i])));
  }
  return sum;
}

namespace {

inline std::uint64_t sq_diff_row(const std::uint8_t* pa, const std::uint8_t* pb,
                                 int n_bytes) {
  std::uint64_t s = 0;
  for (int i = 0; i < n_bytes; ++i) {
    const int d = int(pa[i]) - int(pb[i]);
    s += static_cast<std::uint64_t>(d * d);
  }
  return s;
}

}  // namespace

std::uint64_t sq_diff_sum_region_serial(const Frame& a, const Frame& b, int x0,
                                        int y0, int x1, int y1) {
  std::uint64_t sum = 0;
  for (int y = y0; y < y1; ++y) {
    sum += sq_diff_row(a.px(x0, y), b.px(x0, y), (x1 - x0) * 3);
  }
  return sum;
}

std::uint64_t sq_diff_sum_region(const Frame& a, const Frame& b, int x0, int y0,
                                 int x1, int y1) {
  std::uint64_t sum = 0;
#pragma omp parallel for reduction(+ : sum)
  for (int y = y0; y < y1; ++y) {
    sum += sq_diff_row(a.px(x0, y), b.px(x0, y), (x1 - x0) * 3);
  }
  return sum;
}

namespace {

// Gathers the edge-replicated patch for cell (u,v) and projects it.
inline void project_cell(const Frame& frame, const std::vector<float>& proj,
                         FeatureLayer& layer, int u, int v,
                         std::vector<float>& patch_buf) {
  const int side = 2 * layer.stride;
  const int dim = side * side * 3;
  const int cx = u * layer.stride;
  const int cy = v * layer.stride;
  float* patch = patch_buf.data();
  int j = 0;
  for (int dy = -layer.stride; dy < layer.stride; ++dy) {
    const int y = std::clamp(cy + dy, 0, frame.height - 1);
    for (int dx = -layer.stride; dx < layer.stride; ++dx) {
      const int x = std::clamp(cx + dx, 0, frame.width - 1);
      const std::uint8_t* p = frame.px(x, y);
      patch[j++] = p[0] * (1.0f / 255.0f);
      patch[j++] = p[1] * (1.0f / 255.0f);
      patch[j++] = p[2] * (1.0f / 255.0f);
    }
  }
  float* out = layer.at(u, v);
  for (int c = 0; c < layer.channels; ++c) {
    const float* row = proj.data() + static_cast<std::size_t>(c) * dim;
    float acc = 0.0f;
    for (int k = 0; k < dim; ++k) acc += row[k] * patch[k];
    out[c] = acc;
  }
}

}  // namespace

void project_patches_serial(const Frame& frame, const std::vector<float>& proj,
                            FeatureLayer& layer) {
  std::vector<float> patch(static_cast<std::size_t>(2 * layer.stride) *
                           (2 * layer.stride) * 3);
  for (int v = 0; v < layer.grid_h; ++v) {
    for (int u = 0; u < layer.grid_w; ++u) {
      project_cell(frame, proj, layer, u, v, patch);
    }
  }
}

void project_patches(const Frame& frame, const std::vector<float>& proj,
                     FeatureLayer& layer) {
#pragma omp parallel
  {
    std::vector<float> patch(static_cast<std::size_t>(2 * layer.stride) *
                             (2 * layer.stride) * 3);
#pragma omp for collapse(2)
    for (int v = 0; v < layer.grid_h; ++v) {
      for (int u = 0; u < layer.grid_w; ++u) {
        project_cell(frame, proj, layer, u, v, patch);
      }
    }
  }
}

namespace {

inline float cell_cost(const FeatureLayer& layer, int u, int v,
                       std::span<const float> ref, std::span<const float> inv_std,
                       const std::vector<float>* penalty) {
  const float* f = layer.at(u, v);
  float acc = 0.0f;
  for (int c = 0; c < layer.channels; ++c) {
    const float d = (f[c] - ref[c]) * inv_std[c];
    acc += d * d;
  }
  float cost = std::sqrt(acc);
  if (penalty) {
    cost += (*penalty)[static_cast<std::size_t>(v) * layer.grid_w + u];
  }
  return cost;
}

}  // namespace

void descriptor_cost_map_serial(const FeatureLayer& layer, const CellRect& rect,
                                std::span<const float> ref_descriptor,
                                std::span<const float> inv_std,
                                const std::vector<float>* penalty,
                                std::vector<float>& out) {
  out.resize(static_cast<std::size_t>(rect.count()));
  for (int v = rect.v0; v <= rect.v1; ++v) {
    for (int u = rect.u0; u <= rect.u1; ++u) {
      out[static_cast<std::size_t>(v - rect.v0) * rect.width() + (u - rect.u0)] =
          cell_cost(layer, u, v, ref_descriptor, inv_std, penalty);
    }
  }
}

void descriptor_cost_map(const FeatureLayer& layer, const CellRect& rect,
                         std::span<const float> ref_descriptor,
                         std::span<const float> inv_std,
                         const std::vector<float>* penalty,
                         std::vector<float>& out) {
  out.resize(static_cast<std::size_t>(rect.count()));
#pragma omp parallel for collapse(2)
  for (int v = rect.v0; v <= rect.v1; ++v) {
    for (int u = rect.u0; u <= rect.u1; ++u) {
      out[static_cast<std::size_t>(v - rect.v0) * rect.width() + (u - rect.u0)] =
          cell_cost(layer, u, v, ref_descriptor, inv_std, penalty);
    }
  }
}

namespace {

inline int nearest_centroid(const double* p, int dim, const double* centroids,
                            int k) {
  int best = 0;
  double best_d = 0.0;
  for (int c = 0; c < k; ++c) {
    const double* q = centroids + static_cast<std::size_t>(c) * dim;
    double d = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double diff = p[j] - q[j];
      d += diff * diff;
    }
    if (c == 0 || d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

void assign_nearest_serial(std::span<const double> points, int dim,
                           std::span<const double> centroids,
                           std::vector<int>& out) {
  const int n = static_cast<int>(points.size() / dim);
  const int k = static_cast<int>(centroids.size() / dim);
  out.resize(n);
  for (int i = 0; i < n; ++i) {
    out[i] = nearest_centroid(points.data() + static_cast<std::size_t>(i) * dim,
                              dim, centroids.data(), k);
  }
}

void assign_nearest(std::span<const double> points, int dim,
                    std::span<const double> centroids, std::vector<int>& out) {
  const int n = static_cast<int>(points.size() / dim);
  const int k = static_cast<int>(centroids.size() / dim);
  out.resize(n);
#pragma omp parallel for
  for (int i = 0; i < n; ++i) {
    out[i] = nearest_centroid(points.data() + static_cast<std::size_t>(i) * dim,
                              dim, centroids.data(), k);
  }
}

void pq_adc_scan_serial(std::span<const std::uint8_t> codes, int m,
                        int codebook_size, std::span<const float> tables,
                        std::vector<float>& out) {
  const int n = static_cast<int>(codes.size() / m);
  out.resize(n);
  for (int i = 0; i < n; ++i) {
    const std::uint8_t* c = codes.data() + static_cast<std::size_t>(i) * m;
    float d = 0.0f;
    for (int s = 0; s < m; ++s) {
      d += tables[static_cast<std::size_t>(s) * codebook_size + c[s]];
    }
    out[i] = d;
  }
}

void pq_adc_scan(std::span<const std::uint8_t> codes, int m, int codebook_size,
                 std::span<const float> tables, std::vector<float>& out) {
  const int n = static_cast<int>(codes.size() / m);
  out.resize(n);
#pragma omp parallel for
  for (int i = 0; i < n; ++i) {
    const std::uint8_t* c = codes.data() + static_cast<std::size_t>(i) * m;
    float d = 0.0f;
    for (int s = 0; s < m; ++s) {
      d += tables[static_cast<std::size_t>(s) * codebook_size + c[s]];
    }
    out[i] = d;
  }
}

}  // namespace cloudeye::kernels
