#include "cloudeye/scheduler.hpp"

namespace cloudeye {

namespace {

// total order: better accuracy, then smaller payload, then smaller K, then id
bool better(const ConfigEntry& a, const ConfigEntry& b) {
  if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
  if (a.payload_size != b.payload_size) return a.payload_size < b.payload_size;
  if (a.k != b.k) return a.k < b.k;
  return a.id < b.id;
}

bool smaller(const ConfigEntry& a, const ConfigEntry& b) {
  if (a.payload_size != b.payload_size) return a.payload_size < b.payload_size;
  return a.id < b.id;
}

}  // namespace

Selection select_config(const std::vector<ConfigEntry>& candidates,
                        const BudgetParams& budget) {
  Selection sel;
  const ConfigEntry* best = nullptr;
  const ConfigEntry* min_size = nullptr;
  for (const auto& c : candidates) {
    if (!min_size || smaller(c, *min_size)) min_size = &c;
    if (config_cost_s(c, budget.bandwidth_bytes_per_s) > budget.latency_budget_s) {
      continue;
    }
    if (!best || better(c, *best)) best = &c;
  }
  if (best) {
    sel.entry = *best;
    return sel;
  }
  sel.infeasible = true;
  if (budget.fallback == FallbackPolicy::SmallestSize && min_size) {
    sel.entry = *min_size;
  }
  return sel;
}

}  // namespace cloudeye
