#include "cloudeye/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cloudeye {

namespace {

constexpr double kMinArea = 1e-4;

using Mat7 = Eigen::Matrix<double, 7, 7>;
using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat47 = Eigen::Matrix<double, 4, 7>;

Mat7 transition() {
  Mat7 f = Mat7::Identity();
  f(0, 4) = 1.0;
  f(1, 5) = 1.0;
  f(2, 6) = 1.0;
  return f;
}

Mat47 observation() {
  Mat47 h = Mat47::Zero();
  h(0, 0) = h(1, 1) = h(2, 2) = h(3, 3) = 1.0;
  return h;
}

// noise diag templates, scaled by (scale * sqrt(box area))^2
const double kProcessDiag[7] = {1.0, 1.0, 1.0, 1e-2, 1e-1, 1e-1, 1e-4};
const double kMeasureDiag[4] = {1.0, 1.0, 10.0, 1e-2};

Mat7 process_noise(double area, double scale) {
  const double sigma = scale * std::sqrt(std::max(area, 1.0));
  Mat7 q = Mat7::Zero();
  for (int i = 0; i < 7; ++i) q(i, i) = kProcessDiag[i] * sigma * sigma;
  return q;
}

Mat4 measurement_noise(double area, double scale) {
  const double sigma = scale * std::sqrt(std::max(area, 1.0));
  Mat4 r = Mat4::Zero();
  for (int i = 0; i < 4; ++i) r(i, i) = kMeasureDiag[i] * sigma * sigma;
  return r;
}

Vec4 measure(const BoundingBox& b) {
  Vec4 z;
  const auto c = b.center();
  z << c.x, c.y, b.area(), b.width() / b.height();
  return z;
}

}  // namespace

BoundingBox KalmanTrack::box() const {
  const double s = std::max(state(2), kMinArea);
  const double r = std::max(state(3), kMinArea);
  const double w = std::sqrt(s * r);
  const double h = s / w;
  return BoundingBox::from_center(state(0), state(1), w, h);
}

std::vector<std::pair<int, BoundingBox>> Tracker::predict() {
  static const Mat7 f = transition();
  std::vector<std::pair<int, BoundingBox>> proposals;
  proposals.reserve(tracks_.size());
  for (auto& t : tracks_) {
    t.state = f * t.state;
    if (t.state(2) < kMinArea) t.state(2) = kMinArea;
    if (t.state(3) < kMinArea) t.state(3) = kMinArea;
    t.covariance = f * t.covariance * f.transpose() +
                   process_noise(t.state(2), params_.process_noise_scale);
    ++t.age;
    proposals.emplace_back(t.id, t.box());
  }
  return proposals;
}

void Tracker::update(const std::vector<std::pair<int, Detection>>& matched,
                     const std::vector<Detection>& unmatched_detections) {
  static const Mat47 h = observation();

  std::vector<bool> was_matched(tracks_.size(), false);
  for (const auto& [track_id, det] : matched) {
    if (det.box.area() <= 0.0) {
      ++rejected_;
      continue;
    }
    auto it = std::find_if(tracks_.begin(), tracks_.end(),
                           [&](const KalmanTrack& t) { return t.id == track_id; });
    if (it == tracks_.end()) continue;
    was_matched[static_cast<std::size_t>(it - tracks_.begin())] = true;

    KalmanTrack& t = *it;
    const Vec4 z = measure(det.box);
    const Mat4 r = measurement_noise(z(2), params_.measurement_noise_scale);
    const Vec4 y = z - h * t.state;
    const Mat4 s = h * t.covariance * h.transpose() + r;
    const Eigen::Matrix<double, 7, 4> k =
        t.covariance * h.transpose() * s.inverse();
    t.state += k * y;
    if (t.state(2) < kMinArea) t.state(2) = kMinArea;
    if (t.state(3) < kMinArea) t.state(3) = kMinArea;
    // Joseph form keeps the posterior covariance symmetric PSD
    const Mat7 ikh = Mat7::Identity() - k * h;
    t.covariance =
        ikh * t.covariance * ikh.transpose() + k * r * k.transpose();
    ++t.hits;
    t.time_since_update = 0;
    t.last_confidence = det.confidence;
  }

  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    if (!was_matched[i]) ++tracks_[i].time_since_update;
  }
  std::erase_if(tracks_, [&](const KalmanTrack& t) {
    return t.time_since_update > params_.max_time_since_update;
  });

  for (const auto& det : unmatched_detections) {
    if (det.box.area() <= 0.0) {
      ++rejected_;
      continue;
    }
    KalmanTrack t;
    t.id = next_id_++;
    const Vec4 z = measure(det.box);
    t.state << z(0), z(1), z(2), z(3), 0.0, 0.0, 0.0;
    const Mat4 r = measurement_noise(z(2), params_.measurement_noise_scale);
    Mat7 p = Mat7::Zero();
    for (int i = 0; i < 4; ++i) p(i, i) = r(i, i);
    // velocities are unobserved at birth: inflate so first updates dominate
    p(4, 4) = 10.0 * r(0, 0);
    p(5, 5) = 10.0 * r(1, 1);
    p(6, 6) = 10.0 * r(2, 2);
    t.covariance = p;
    t.hits = 1;
    t.class_id = det.class_id;
    t.last_confidence = det.confidence;
    tracks_.push_back(std::move(t));
  }
}

int Tracker::confirmed_count() const {
  return static_cast<int>(std::count_if(
      tracks_.begin(), tracks_.end(),
      [&](const KalmanTrack& t) { return t.hits >= params_.min_hits; }));
}

double Tracker::mean_speed() const {
  if (tracks_.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& t : tracks_) sum += t.speed();
  return sum / static_cast<double>(tracks_.size());
}

const char* to_string(FullReason r) {
  switch (r) {
    case FullReason::None: return "none";
    case FullReason::PixelChange: return "pixel_change";
    case FullReason::CloudStale: return "cloud_stale";
    case FullReason::NoTracks: return "no_tracks";
  }
  return "unknown";
}

InferenceMode choose_mode(const Frame& prev, const Frame& cur, bool tracks_empty,
                          int frames_since_cloud, const TrackerParams& params) {
  if (frame_diff(prev, cur) > params.full_infer_pixel_threshold) {
    return {false, FullReason::PixelChange};
  }
  if (frames_since_cloud > params.cloud_staleness_limit) {
    return {false, FullReason::CloudStale};
  }
  if (tracks_empty) {
    return {false, FullReason::NoTracks};
  }
  return {true, FullReason::None};
}

FastInferResult fast_infer(const Frame& frame, Tracker& tracker,
                           const ModelInterface& edge_model,
                           const TrackerParams& params) {
  if (tracker.empty()) {
    throw std::logic_error("fast_infer: no live tracks, full inference required");
  }
  const auto proposals = tracker.predict();
  std::vector<BoundingBox> proposal_boxes;
  proposal_boxes.reserve(proposals.size());
  for (const auto& [id, box] : proposals) proposal_boxes.push_back(box);

  const FeatureMap features = edge_model.extract(frame);
  std::vector<Detection> dets =
      edge_model.regress(proposal_boxes, features, frame);

  FastInferResult result;
  for (auto& d : dets) {
    const BoundingBox clamped = d.box.clamped(frame.width, frame.height);
    if (clamped.x_min != d.box.x_min || clamped.y_min != d.box.y_min ||
        clamped.x_max != d.box.x_max || clamped.y_max != d.box.y_max) {
      d.box = clamped;
      ++result.clamped;
    }
    d.source = Source::Tracked;
  }

  std::vector<BoundingBox> det_boxes;
  det_boxes.reserve(dets.size());
  for (const auto& d : dets) det_boxes.push_back(d.box);
  const auto pairs =
      greedy_iou_match(proposal_boxes, det_boxes, params.association_iou);

  std::vector<std::pair<int, Detection>> matched;
  std::vector<bool> det_used(dets.size(), false);
  for (const auto& [pi, di] : pairs) {
    matched.emplace_back(proposals[pi].first, dets[di]);
    det_used[di] = true;
  }
  std::vector<Detection> unmatched;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (!det_used[i]) unmatched.push_back(dets[i]);
  }
  tracker.update(matched, unmatched);

  result.detections = std::move(dets);
  result.proposals = static_cast<int>(proposals.size());
  return result;
}

}  // namespace cloudeye
