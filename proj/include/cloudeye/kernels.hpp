#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cloudeye/feature_map.hpp"
#include "cloudeye/frame.hpp"

// Data-parallel inner loops, each with a serial reference twin. The OpenMP
// versions are bitwise identical to the serial ones for any thread count:
// every output element is computed independently, and reductions accumulate
// in exact integer arithmetic.
namespace cloudeye::kernels {

// Sum of |a[i] - b[i]| over equal-length byte spans.
std::uint64_t abs_diff_sum(std::span<const std::uint8_t> a,
                           std::span<const std::uint8_t> b);
std::uint64_t abs_diff_sum_serial(std::span<const std::uint8_t> a,
                                  std::span<const std::uint8_t> b);

// Sum of squared per-channel differences over a pixel rect of two
// equal-dimension frames. Rect is [x0,x1) x [y0,y1), caller-clamped.
std::uint64_t sq_diff_sum_region(const Frame& a, const Frame& b, int x0, int y0,
                                 int x1, int y1);
std::uint64_t sq_diff_sum_region_serial(const Frame& a, const Frame& b, int x0,
                                        int y0, int x1, int y1);

// Fills layer.data: cell (u,v) = proj * patch(u,v), patch side 2*stride
// centered at (u*stride, v*stride), edge-replicated, pixel values in [0,1].
void project_patches(const Frame& frame, const std::vector<float>& proj,
                     FeatureLayer& layer);
void project_patches_serial(const Frame& frame, const std::vector<float>& proj,
                            FeatureLayer& layer);

// Inclusive cell rectangle on a feature grid.
struct CellRect {
  int u0 = 0, v0 = 0, u1 = -1, v1 = -1;
  int width() const { return u1 - u0 + 1; }
  int height() const { return v1 - v0 + 1; }
  int count() const { return width() > 0 && height() > 0 ? width() * height() : 0; }
};

// Diagonal-Mahalanobis distance from a reference descriptor to every cell in
// the rect; out is row-major over the rect. penalty, when non-null, is a
// full-grid (grid_w*grid_h) additive term.
void descriptor_cost_map(const FeatureLayer& layer, const CellRect& rect,
                         std::span<const float> ref_descriptor,
                         std::span<const float> inv_std,
                         const std::vector<float>* penalty,
                         std::vector<float>& out);
void descriptor_cost_map_serial(const FeatureLayer& layer, const CellRect& rect,
                                std::span<const float> ref_descriptor,
                                std::span<const float> inv_std,
                                const std::vector<float>* penalty,
                                std::vector<float>& out);

// Nearest-centroid assignment for flat row-major points/centroids.
// Ties break to the lower centroid index.
void assign_nearest(std::span<const double> points, int dim,
                    std::span<const double> centroids, std::vector<int>& out);
void assign_nearest_serial(std::span<const double> points, int dim,
                           std::span<const double> centroids,
                           std::vector<int>& out);

// Asymmetric PQ distance scan: codes is n_entries x m subspace code bytes,
// tables is m x codebook_size per-subspace distances for the query.
void pq_adc_scan(std::span<const std::uint8_t> codes, int m, int codebook_size,
                 std::span<const float> tables, std::vector<float>& out);
void pq_adc_scan_serial(std::span<const std::uint8_t> codes, int m,
                        int codebook_size, std::span<const float> tables,
                        std::vector<float>& out);

}  // namespace cloudeye::kernels
