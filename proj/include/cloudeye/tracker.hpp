#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "cloudeye/frame.hpp"
#include "cloudeye/geometry.hpp"
#include "cloudeye/scripted_model.hpp"

namespace cloudeye {

struct TrackerParams {
  double process_noise_scale = 0.05;
  double measurement_noise_scale = 0.05;
  int max_time_since_update = 12;
  int min_hits = 3;  // gates the confirmed-track count reported in traces
  double full_infer_pixel_threshold = 0.12;
  int cloud_staleness_limit = 60;  // frames
  double association_iou = 0.3;
};

// SORT-style track: state [cx, cy, s, r, vcx, vcy, vs] with s the box area,
// r the aspect ratio (constant, no velocity term).
struct KalmanTrack {
  using State = Eigen::Matrix<double, 7, 1>;
  using Covariance = Eigen::Matrix<double, 7, 7>;

  int id = 0;
  State state = State::Zero();
  Covariance covariance = Covariance::Identity();
  int age = 0;
  int hits = 0;
  int time_since_update = 0;
  int class_id = 0;
  double last_confidence = 1.0;

  BoundingBox box() const;
  // planar speed estimate in px/frame
  double speed() const { return std::hypot(state(4), state(5)); }
};

class Tracker {
 public:
  explicit Tracker(TrackerParams params) : params_(params) {}

  // Advances every track one step (constant velocity, process noise added)
  // and returns the predicted boxes as proposals.
  std::vector<std::pair<int, BoundingBox>> predict();

  // Standard Kalman measurement update for matched tracks; unmatched tracks
  // age out past max_time_since_update; unmatched detections spawn tracks.
  // Detections with non-positive area are rejected (counted, not fatal).
  void update(const std::vector<std::pair<int, Detection>>& matched,
              const std::vector<Detection>& unmatched_detections);

  const std::vector<KalmanTrack>& tracks() const { return tracks_; }
  bool empty() const { return tracks_.empty(); }
  std::size_t size() const { return tracks_.size(); }
  int confirmed_count() const;
  double mean_speed() const;
  int rejected_detections() const { return rejected_; }

 private:
  TrackerParams params_;
  std::vector<KalmanTrack> tracks_;
  int next_id_ = 1;
  int rejected_ = 0;
};

enum class FullReason : std::uint8_t { None, PixelChange, CloudStale, NoTracks };

struct InferenceMode {
  bool fast = true;
  FullReason reason = FullReason::None;
};

const char* to_string(FullReason r);

// Fallback triggers, checked in order: pixel change, cloud staleness, empty
// tracker. frames_since_cloud counts frames since a cloud result was applied.
InferenceMode choose_mode(const Frame& prev, const Frame& cur, bool tracks_empty,
                          int frames_since_cloud, const TrackerParams& params);

struct FastInferResult {
  std::vector<Detection> detections;  // source Tracked
  int proposals = 0;
  int clamped = 0;  // regressed boxes that fell outside the frame
};

// Alg: predict proposals -> extract -> regress on proposals only ->
// associate -> Kalman update. Precondition: tracker non-empty (Fast mode).
FastInferResult fast_infer(const Frame& frame, Tracker& tracker,
                           const ModelInterface& edge_model,
                           const TrackerParams& params);

}  // namespace cloudeye
