#include "cloudeye/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cloudeye {

double BandwidthTrace::rate_at(double t) const {
  if (samples.empty()) throw std::runtime_error("BandwidthTrace: empty trace");
  double rate = samples.front().bytes_per_s;
  for (const auto& s : samples) {
    if (s.t_s <= t) rate = s.bytes_per_s;
    else break;
  }
  return rate;
}

double BandwidthTrace::integrate(double t0, double t1) const {
  if (t1 <= t0) return 0.0;
  double total = 0.0;
  double cursor = t0;
  for (std::size_t i = 0; i < samples.size() && cursor < t1; ++i) {
    const double seg_end =
        i + 1 < samples.size() ? samples[i + 1].t_s : t1;
    if (seg_end <= cursor) continue;
    const double lo = std::max(cursor, samples[i].t_s);
    const double hi = std::min(seg_end, t1);
    if (hi > lo) {
      total += samples[i].bytes_per_s * (hi - lo);
      cursor = hi;
    }
  }
  if (cursor < t1) {
    total += samples.back().bytes_per_s * (t1 - cursor);
  }
  return total;
}

double BandwidthTrace::trailing_mean(double t, double window_s) const {
  const double t0 = std::max(0.0, t - window_s);
  if (t <= t0) return rate_at(t);
  return integrate(t0, t) / (t - t0);
}

double BandwidthTrace::transfer_end(double bytes, double start_t) const {
  if (bytes <= 0.0) return start_t;
  double remaining = bytes;
  double cursor = start_t;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const bool last = i + 1 == samples.size();
    const double seg_end = last ? std::numeric_limits<double>::infinity()
                                : samples[i + 1].t_s;
    if (seg_end <= cursor) continue;
    const double lo = std::max(cursor, samples[i].t_s);
    const double rate = samples[i].bytes_per_s;
    if (last) return lo + remaining / rate;
    const double capacity = rate * (seg_end - lo);
    if (capacity >= remaining) return lo + remaining / rate;
    remaining -= capacity;
    cursor = seg_end;
  }
  throw std::runtime_error("BandwidthTrace: empty trace");
}

BandwidthTrace BandwidthTrace::constant(double bytes_per_s, double duration_s) {
  BandwidthTrace t;
  t.samples.push_back({0.0, bytes_per_s});
  if (duration_s > 0.0) t.samples.push_back({duration_s, bytes_per_s});
  return t;
}

BandwidthTrace BandwidthTrace::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("BandwidthTrace: cannot open " + path);
  BandwidthTrace trace;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("t_s", 0) == 0) continue;  // header
    std::istringstream row(line);
    std::string t_str, r_str;
    if (!std::getline(row, t_str, ',') || !std::getline(row, r_str, ',')) {
      throw std::runtime_error("BandwidthTrace: " + path + ":" +
                               std::to_string(line_no) + ": malformed row");
    }
    BandwidthTrace::Sample s{std::stod(t_str), std::stod(r_str)};
    if (s.bytes_per_s <= 0.0) {
      throw std::runtime_error("BandwidthTrace: rate must be positive");
    }
    if (!trace.samples.empty() && s.t_s <= trace.samples.back().t_s) {
      throw std::runtime_error("BandwidthTrace: timestamps must increase");
    }
    trace.samples.push_back(s);
  }
  if (trace.samples.empty()) {
    throw std::runtime_error("BandwidthTrace: empty trace " + path);
  }
  return trace;
}

void BandwidthTrace::save_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("BandwidthTrace: cannot open " + path);
  out << "t_s,bytes_per_s\n";
  for (const auto& s : samples) out << s.t_s << "," << s.bytes_per_s << "\n";
}

UploadQueue::PushResult UploadQueue::push(UploadQueueItem item) {
  PushResult result;
  const std::int64_t inserted = item.frame_id;
  // insertion point: keyframes ahead of regular frames, FIFO within a class
  auto pos = items_.end();
  if (item.is_keyframe) {
    pos = std::find_if(items_.begin(), items_.end(),
                       [](const UploadQueueItem& q) { return !q.is_keyframe; });
  }
  items_.insert(pos, std::move(item));

  if (items_.size() > max_items_) {
    // oldest non-keyframe goes first; all-keyframe queues drop their oldest
    auto victim = items_.end();
    double oldest = std::numeric_limits<double>::infinity();
    for (auto it = items_.begin(); it != items_.end(); ++it) {
      if (!it->is_keyframe && it->enqueue_time < oldest) {
        oldest = it->enqueue_time;
        victim = it;
      }
    }
    if (victim == items_.end()) victim = items_.begin();
    result.evicted_frame = victim->frame_id;
    result.accepted = victim->frame_id != inserted;
    items_.erase(victim);
  }
  return result;
}

const UploadQueueItem* UploadQueue::head() const {
  return items_.empty() ? nullptr : &items_.front();
}

UploadQueueItem UploadQueue::pop() {
  UploadQueueItem item = std::move(items_.front());
  items_.pop_front();
  return item;
}

double send_probability(std::size_t payload_bytes, bool is_keyframe,
                        double bw_estimate, const QueueParams& params) {
  double p = std::min(
      1.0, bw_estimate * params.send_window_s / std::max<double>(payload_bytes, 1.0));
  if (is_keyframe) p = std::min(1.0, params.keyframe_boost * p);
  return p;
}

std::optional<UploadQueueItem> maybe_send(UploadQueue& queue, double bw_estimate,
                                          const QueueParams& params, Rng& rng) {
  const UploadQueueItem* head = queue.head();
  if (!head) return std::nullopt;
  const double p = send_probability(head->payload.size(), head->is_keyframe,
                                    bw_estimate, params);
  if (rng.uniform01() < p) return queue.pop();
  return std::nullopt;
}

UploadTiming simulate_upload(std::size_t bytes, const BandwidthTrace& trace,
                             double start_t, double rtt_s,
                             double cloud_latency_s, double horizon_s) {
  UploadTiming timing;
  timing.send_done = trace.transfer_end(static_cast<double>(bytes), start_t);
  if (timing.send_done > horizon_s) {
    timing.stalled = true;
    return timing;
  }
  timing.completion = timing.send_done + rtt_s + cloud_latency_s;
  return timing;
}

NetSim::NetSim(BandwidthTrace trace, NetSimParams params)
    : trace_(std::move(trace)),
      params_(params),
      queue_(params.queue.max_queue),
      rng_(derive_seed(params.seed, 0x6e657473696dull)) {}

bool NetSim::enqueue(UploadQueueItem item, double now) {
  const std::int64_t frame_id = item.frame_id;
  const std::uint64_t bytes = item.payload.size();
  events_.push_back({"enqueue", now, frame_id, bytes});
  const auto result = queue_.push(std::move(item));
  if (result.evicted_frame) {
    events_.push_back({"evict", now, *result.evicted_frame, 0});
  }
  return result.accepted;
}

void NetSim::start_upload(UploadQueueItem item, double now) {
  const std::uint64_t bytes = item.payload.size();
  events_.push_back({"send_start", now, item.frame_id, bytes});
  const UploadTiming timing =
      simulate_upload(item.payload.size(), trace_, now, params_.rtt_s,
                      params_.cloud_latency_s);
  busy_until_ = timing.send_done;
  events_.push_back({"send_done", timing.send_done, item.frame_id, bytes});
  events_.push_back({"cloud_done",
                     timing.send_done + params_.rtt_s / 2.0 + params_.cloud_latency_s,
                     item.frame_id, 0});
  pending_.push_back(
      {item.frame_id, std::move(item.cloud_detections), timing.completion});
}

void NetSim::tick(double now) {
  if (!link_idle(now) || queue_.empty()) return;
  auto item = maybe_send(queue_, bandwidth_estimate(now), params_.queue, rng_);
  if (item) start_upload(std::move(*item), now);
}

void NetSim::force_send(double now) {
  if (!link_idle(now) || queue_.empty()) return;
  start_upload(queue_.pop(), now);
}

std::vector<CloudResult> NetSim::collect(double now) {
  std::vector<CloudResult> ready;
  auto it = pending_.begin();
  while (it != pending_.end()) {
    if (it->completion_time <= now) {
      events_.push_back({"deliver", it->completion_time, it->frame_id, 0});
      ready.push_back(std::move(*it));
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
  std::sort(ready.begin(), ready.end(), [](const CloudResult& a, const CloudResult& b) {
    if (a.completion_time != b.completion_time) {
      return a.completion_time < b.completion_time;
    }
    return a.frame_id < b.frame_id;
  });
  return ready;
}

double NetSim::bandwidth_estimate(double now) const {
  return trace_.trailing_mean(now, 1.0);
}

}  // namespace cloudeye
