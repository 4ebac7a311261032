#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cloudeye/cloud_model.hpp"
#include "cloudeye/embedding.hpp"
#include "cloudeye/frame.hpp"
#include "cloudeye/geometry.hpp"

namespace cloudeye {

// Deterministic virtual-latency model shared by the pipeline and the offline
// profiler. Measured wall-clock timings would break byte-identical reruns, so
// recorded costs come from these documented synthetic constants instead.
struct CostModel {
  double extract_per_mpx_s = 0.010;
  double regress_per_proposal_s = 0.0005;
  int full_infer_proposals = 64;  // desk-scale stand-in for the dense grid
  double mine_per_cell_s = 2e-7;
  double cluster_per_box_k_s = 2e-5;
  double encode_per_mpx_s = 0.008;

  double t_cluster(int n_boxes, int k) const {
    return cluster_per_box_k_s * n_boxes * k;
  }
  double t_encode(double encoded_mpx) const { return encode_per_mpx_s * encoded_mpx; }
};

struct ConfigEntry {
  std::int64_t id = 0;
  DistributionEmbedding embedding;
  int k = 1;
  int q_roi = 90;
  int q_bg = 20;
  double accuracy = 0.0;           // single-frame AP of the cloud model
  std::uint64_t payload_size = 0;  // serialized bytes
  double t_cluster_s = 0.0;
  double t_encode_s = 0.0;
  std::int64_t frame_id = 0;
};

using ConfigSet = std::vector<ConfigEntry>;

struct ProfileParams {
  std::vector<int> k_list{1, 2, 3, 4};
  std::vector<std::pair<int, int>> q_list{{90, 20}, {90, 50}, {70, 20}, {50, 10}};
  int grid_g = 4;
  double roi_padding = 16.0;
  CostModel cost;
};

struct ProfileResult {
  ConfigSet entries;
  int skipped = 0;  // k exceeded the frame's box count
};

// Alg: for every (frame, K, Q): cluster, plan, encode, decode, run the cloud
// model on the decoded frame, record accuracy / size / modeled timings.
ProfileResult build_config_set(const std::vector<Frame>& frames,
                               const std::vector<GroundTruth>& gts,
                               const ProfileParams& params,
                               const CloudModelConfig& cloud);

// JSONL persistence, one entry per line, byte-stable for fixed inputs.
void save_config_set(const ConfigSet& set, const std::string& path);
ConfigSet load_config_set(const std::string& path);

}  // namespace cloudeye
