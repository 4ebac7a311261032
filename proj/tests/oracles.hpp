#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "cloudeye/mining.hpp"

namespace cloudeye::testing {

// Brute-force reference for match_target round-1 search: every candidate p0
// cell in the region is tried, quadrant minima found by full enumeration, and
// the candidate with the smallest total group loss wins (row-major ties).
// Shares no code with the implementation's cost-map/argmin path.
struct OracleMatch {
  bool found = false;
  int u0 = 0, v0 = 0;
  double group_loss = std::numeric_limits<double>::infinity();
  BoundingBox box;
};

inline double oracle_distance(const FeatureLayer& layer, int u, int v,
                              const std::vector<float>& ref,
                              const std::vector<float>& inv_std) {
  const float* f = layer.at(u, v);
  double acc = 0.0;
  for (int c = 0; c < layer.channels; ++c) {
    const double d = (double(f[c]) - double(ref[c])) * double(inv_std[c]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

inline OracleMatch exhaustive_match_oracle(const SamplePoints& ref,
                                           const FeatureMap& cur,
                                           const std::vector<float>& inv_std,
                                           const SearchRegion& region,
                                           double occlusion_threshold) {
  const FeatureLayer& layer = cur.layers[ref.layer_index];
  const int u0 = std::clamp(static_cast<int>(std::ceil(region.box.x_min / layer.stride)),
                            0, layer.grid_w - 1);
  const int u1 = std::clamp(static_cast<int>(std::floor(region.box.x_max / layer.stride)),
                            0, layer.grid_w - 1);
  const int v0 = std::clamp(static_cast<int>(std::ceil(region.box.y_min / layer.stride)),
                            0, layer.grid_h - 1);
  const int v1 = std::clamp(static_cast<int>(std::floor(region.box.y_max / layer.stride)),
                            0, layer.grid_h - 1);

  OracleMatch best;
  struct Cell {
    int u, v;
  };
  for (int cv = v0; cv <= v1; ++cv) {
    for (int cu = u0; cu <= u1; ++cu) {
      double total = oracle_distance(layer, cu, cv, ref.descriptors[0], inv_std);
      Cell picks[5];
      picks[0] = {cu, cv};
      const int qu[4][4] = {{u0, v0, cu, cv},
                            {cu, v0, u1, cv},
                            {u0, cv, cu, v1},
                            {cu, cv, u1, v1}};
      for (int i = 1; i < 5; ++i) {
        double q_best = std::numeric_limits<double>::infinity();
        Cell q_cell{qu[i - 1][0], qu[i - 1][1]};
        for (int v = qu[i - 1][1]; v <= qu[i - 1][3]; ++v) {
          for (int u = qu[i - 1][0]; u <= qu[i - 1][2]; ++u) {
            const double d = oracle_distance(layer, u, v, ref.descriptors[i], inv_std);
            if (d < q_best) {
              q_best = d;
              q_cell = {u, v};
            }
          }
        }
        total += q_best;
        picks[i] = q_cell;
      }
      if (total < best.group_loss) {
        best.group_loss = total;
        best.u0 = cu;
        best.v0 = cv;
        if (total <= occlusion_threshold) {
          best.found = true;
          const auto dist = [&](int a, int b) {
            return std::hypot(double(picks[a].u - picks[b].u) * layer.stride,
                              double(picks[a].v - picks[b].v) * layer.stride);
          };
          const double width = dist(1, 2) + dist(3, 4);
          const double height = dist(1, 3) + dist(2, 4);
          const double s_x =
              std::clamp(width / std::max(ref.box.width(), 1e-9), 1.0 / 3.0, 3.0);
          const double s_y =
              std::clamp(height / std::max(ref.box.height(), 1e-9), 1.0 / 3.0, 3.0);
          best.box = BoundingBox::from_center(
              (cu + 0.5) * layer.stride, (cv + 0.5) * layer.stride,
              ref.box.width() * s_x, ref.box.height() * s_y);
        }
      }
    }
  }
  return best;
}

}  // namespace cloudeye::testing
