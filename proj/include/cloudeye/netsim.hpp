#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "cloudeye/geometry.hpp"
#include "cloudeye/rng.hpp"

namespace cloudeye {

// Step-wise bandwidth trace: rate(t) holds from each sample until the next,
// the last rate persists. Times strictly increase, rates are positive.
struct BandwidthTrace {
  struct Sample {
    double t_s = 0.0;
    double bytes_per_s = 0.0;
  };
  std::vector<Sample> samples;

  double rate_at(double t) const;
  double integrate(double t0, double t1) const;  // bytes deliverable
  double trailing_mean(double t, double window_s = 1.0) const;
  // time to move `bytes` starting at start_t
  double transfer_end(double bytes, double start_t) const;
  double horizon() const { return samples.empty() ? 0.0 : samples.back().t_s; }

  static BandwidthTrace constant(double bytes_per_s, double duration_s);
  static BandwidthTrace load_csv(const std::string& path);
  void save_csv(const std::string& path) const;
};

struct UploadQueueItem {
  std::int64_t frame_id = 0;
  bool is_keyframe = false;
  double enqueue_time = 0.0;
  std::vector<std::uint8_t> payload;
  int k = 1, q_roi = 90, q_bg = 20;
  // cloud detections precomputed from the decoded payload, delivered on
  // completion
  std::vector<Detection> cloud_detections;
};

struct QueueParams {
  std::size_t max_queue = 8;
  double send_window_s = 0.5;  // tau in p = min(1, bw*tau/size)
  double keyframe_boost = 2.0;
};

// Keyframes order ahead of regular frames; within a priority class FIFO by
// enqueue time. When full, the oldest non-keyframe goes first.
class UploadQueue {
 public:
  explicit UploadQueue(std::size_t max_items) : max_items_(max_items) {}

  struct PushResult {
    bool accepted = true;
    std::optional<std::int64_t> evicted_frame;
  };
  PushResult push(UploadQueueItem item);

  const UploadQueueItem* head() const;
  UploadQueueItem pop();
  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }
  const std::deque<UploadQueueItem>& items() const { return items_; }

 private:
  std::size_t max_items_;
  std::deque<UploadQueueItem> items_;
};

double send_probability(std::size_t payload_bytes, bool is_keyframe,
                        double bw_estimate, const QueueParams& params);

// One probabilistic attempt on the head; an unsent head stays for the next
// tick. Deterministic under a fixed rng stream.
std::optional<UploadQueueItem> maybe_send(UploadQueue& queue, double bw_estimate,
                                          const QueueParams& params, Rng& rng);

struct UploadTiming {
  double send_done = 0.0;
  double completion = 0.0;  // send_done + rtt + cloud latency
  bool stalled = false;
};

// Upload end solves the step-wise rate integral; result return bytes are
// treated as free. horizon_s caps the search (stalled beyond it).
UploadTiming simulate_upload(std::size_t bytes, const BandwidthTrace& trace,
                             double start_t, double rtt_s,
                             double cloud_latency_s,
                             double horizon_s = std::numeric_limits<double>::infinity());

struct CloudResult {
  std::int64_t frame_id = 0;
  std::vector<Detection> detections;
  double completion_time = 0.0;
};

struct NetEvent {
  std::string event;  // enqueue|evict|send_start|send_done|cloud_done|deliver
  double t = 0.0;
  std::int64_t frame_id = 0;
  std::uint64_t bytes = 0;
};

struct NetSimParams {
  QueueParams queue;
  double rtt_s = 0.05;
  double cloud_latency_s = 0.1;
  std::uint64_t seed = 1;
};

// Single-threaded virtual-clock link model: one in-flight upload at a time,
// events appended in decision order.
class NetSim {
 public:
  NetSim(BandwidthTrace trace, NetSimParams params);

  bool enqueue(UploadQueueItem item, double now);
  // one send attempt if the link is idle
  void tick(double now);
  // bypasses the probability gate (keyframe fast path on an empty link)
  void force_send(double now);
  std::vector<CloudResult> collect(double now);

  double bandwidth_estimate(double now) const;
  bool link_idle(double now) const { return now >= busy_until_; }
  const UploadQueue& queue() const { return queue_; }
  const std::vector<NetEvent>& events() const { return events_; }
  const BandwidthTrace& trace() const { return trace_; }
  int stalled_count() const { return stalled_; }

 private:
  void start_upload(UploadQueueItem item, double now);

  BandwidthTrace trace_;
  NetSimParams params_;
  UploadQueue queue_;
  Rng rng_;
  double busy_until_ = 0.0;
  std::vector<CloudResult> pending_;
  std::vector<NetEvent> events_;
  int stalled_ = 0;
};

}  // namespace cloudeye
