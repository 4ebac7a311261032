#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <vector>

#include "cloudeye/feature_map.hpp"
#include "cloudeye/frame.hpp"
#include "cloudeye/geometry.hpp"

namespace cloudeye {

struct MiningParams {
  double l_padding = 32.0;  // px, search-region expansion
  int depth = 3;            // max search rounds
  double epsilon = 2.5;     // group-loss acceptance threshold
  double occlusion_threshold = 12.0;
  double penalty_weight = 1.0;
  int reference_staleness_threshold = 8;  // frames; recomputed from track speed
  double duplicate_iou = 0.5;  // edge detection already covers the target
  double track_link_iou = 0.3;
  // confidence = scale_b / (exp(mean loss) - tau_b), by size bucket
  double conf_scale_small = 0.5;
  double conf_scale_large = 0.8;
  double conf_tau_small = 0.0;
  double conf_tau_large = 0.0;
  double small_area_threshold = 32.0 * 32.0;
};

// Five sampled descriptors of one reference target: p0 the box center,
// p1..p4 the quadrant centers ordered TL, TR, BL, BR.
struct SamplePoints {
  std::array<Point, 5> points{};
  std::array<std::vector<float>, 5> descriptors{};
  int layer_index = 0;
  bool degenerate = false;  // box under 2x2 cells, p1..p4 collapsed onto p0
  BoundingBox box;
  int class_id = 0;
};

// scale+translation transform, scales clamped to a plausibility window
struct MatchTransform {
  double s_x = 1.0, s_y = 1.0;
  double t_x = 0.0, t_y = 0.0;

  static constexpr double kMinScale = 1.0 / 3.0;
  static constexpr double kMaxScale = 3.0;
};

struct SearchRegion {
  BoundingBox box;
  int source_track_id = -1;
  int feature_layer_index = 0;
};

enum class MatchFailure : std::uint8_t { None, Degenerate, Occluded };

struct MatchResult {
  std::optional<Detection> detection;
  double confidence = 0.0;
  double group_loss = std::numeric_limits<double>::infinity();
  int rounds = 0;
  bool conservative = false;
  MatchFailure failure = MatchFailure::None;
  MatchTransform transform;
  int cells_searched = 0;  // cost-map evaluations, feeds the latency model
};

// Layer whose stride is closest to sqrt(area)/4 (box spans ~4x4 cells);
// ties break to the smaller stride.
int select_layer(const BoundingBox& box, const FeatureMap& fmap);

// Eq-style combine: corner-wise hull of prediction and reference boxes,
// expanded by l_padding, clamped to the frame.
SearchRegion search_region(const BoundingBox& o_pre, const BoundingBox& o_ref,
                           double l_padding, int frame_w, int frame_h);

SamplePoints sample_descriptors(const Detection& det, const FeatureMap& fmap);

// Per-channel inverse standard deviation over each layer, variance floored
// at 1e-6; the diagonal Mahalanobis metric used by the matcher.
std::vector<std::vector<float>> estimate_inv_std(const FeatureMap& fmap);

// Iterative 5-point hierarchical match of a reference target inside the
// search region: argmin p0, quadrant matches for p1..p4, penalty rounds on
// failure, conservative fallback on the final round, occlusion cut-off.
MatchResult match_target(const SamplePoints& ref, const FeatureMap& cur,
                         const std::vector<float>& inv_std,
                         const SearchRegion& region, const MiningParams& params);

struct ReferenceFrame {
  std::int64_t frame_id = -1;
  std::vector<Detection> detections;
  FeatureMap features;
  std::vector<SamplePoints> samples;
  std::vector<std::vector<float>> layer_inv_std;

  bool valid() const { return frame_id >= 0; }
};

ReferenceFrame make_reference(std::int64_t frame_id,
                              std::vector<Detection> detections,
                              FeatureMap features);

struct MiningEvent {
  std::int64_t frame_id = 0;
  int target = 0;
  int rounds = 0;
  double group_loss = 0.0;
  bool conservative = false;
  bool matched = false;
  double confidence = 0.0;
};

struct MineOutcome {
  std::vector<Detection> detections;  // edge detections plus mined appendix
  int mined = 0;
  int cells_searched = 0;
};

// Recovers reference targets the edge detector missed. Edge detections pass
// through untouched; mined ones are appended with source Mined.
MineOutcome mine_frame(const FeatureMap& cur_features,
                       const std::vector<Detection>& edge_dets,
                       const std::vector<std::pair<int, BoundingBox>>& track_predictions,
                       const ReferenceFrame& ref, const MiningParams& params,
                       std::vector<MiningEvent>* trace = nullptr);

// Ring of recently processed frames, newest last, contiguous ids.
struct CachedFrame {
  Frame frame;
  FeatureMap features;
  std::vector<Detection> detections;
  std::vector<std::vector<float>> layer_inv_std;
};

class FrameCache {
 public:
  explicit FrameCache(std::size_t capacity) : capacity_(capacity) {}

  void push(Frame frame, FeatureMap features, std::vector<Detection> dets);
  const CachedFrame* find(std::int64_t frame_id) const;
  const CachedFrame* newest() const;
  std::size_t size() const { return ring_.size(); }

 private:
  std::size_t capacity_;
  std::deque<CachedFrame> ring_;
};

struct RefreshResult {
  std::optional<ReferenceFrame> reference;
  bool evicted = false;  // cloud frame fell out of the cache, rebuild flagged
  int hops = 0;
  int new_staleness_threshold = 0;
};

// Builds the reference from a cloud result: verbatim when fresh, otherwise
// chained forward frame-by-frame with match_target hops. The staleness
// threshold is recomputed as mean box diagonal / mean track speed.
RefreshResult refresh_reference(const FrameCache& cache,
                                std::int64_t cloud_frame_id,
                                const std::vector<Detection>& cloud_dets,
                                const MiningParams& params,
                                double mean_track_speed);

}  // namespace cloudeye
