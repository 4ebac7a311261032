#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cloudeye/config_set.hpp"

namespace cloudeye {

enum class FallbackPolicy : std::uint8_t { SmallestSize, Skip };

struct BudgetParams {
  double bandwidth_bytes_per_s = 1e6;
  double latency_budget_s = 0.5;
  FallbackPolicy fallback = FallbackPolicy::SmallestSize;
};

struct Selection {
  std::optional<ConfigEntry> entry;
  bool infeasible = false;  // SmallestSize fallback engaged
};

inline double config_cost_s(const ConfigEntry& e, double bandwidth) {
  return static_cast<double>(e.payload_size) / bandwidth + e.t_cluster_s +
         e.t_encode_s;
}

// Picks the feasible candidate maximizing accuracy (ties: smaller size, then
// smaller K, then id); applies the fallback policy when nothing fits.
Selection select_config(const std::vector<ConfigEntry>& candidates,
                        const BudgetParams& budget);

}  // namespace cloudeye
