#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cloudeye/cloud_model.hpp"
#include "cloudeye/config_set.hpp"
#include "cloudeye/mining.hpp"
#include "cloudeye/netsim.hpp"
#include "cloudeye/pq_index.hpp"
#include "cloudeye/scenario.hpp"
#include "cloudeye/scheduler.hpp"
#include "cloudeye/scripted_model.hpp"
#include "cloudeye/tracker.hpp"

namespace cloudeye {

struct ModuleToggles {
  bool fast_inference_on = true;
  bool mining_on = true;
  bool quality_encode_on = true;
};

struct PipelineConfig {
  TrackerParams tracker;
  MiningParams mining;
  ExtractorConfig extractor;
  ScriptedModelConfig edge_model;
  CloudModelConfig cloud_model;
  CostModel cost;
  QueueParams queue;
  double rtt_s = 0.05;
  double cloud_latency_s = 0.1;
  double latency_budget_s = 0.5;
  FallbackPolicy fallback = FallbackPolicy::SmallestSize;
  int grid_g = 4;
  double roi_padding = 16.0;
  int default_k = 2;          // used when no config set is loaded
  int default_q_roi = 90;
  int default_q_bg = 20;
  int uniform_q = 90;         // quality_encode off
  int query_top_n = 8;
  int cache_size = 48;
  double fps = 30.0;
  ModuleToggles toggles;
  std::uint64_t seed = 1;
  bool trace_mining = false;
};

struct LatencyBreakdown {
  double extract_s = 0.0;
  double regress_s = 0.0;
  double mine_s = 0.0;
  double encode_s = 0.0;
  double queue_wait_s = 0.0;

  double processing() const { return extract_s + regress_s + mine_s + encode_s; }
};

struct FrameReport {
  std::int64_t frame_id = 0;
  bool fast = true;
  std::string reason;  // none|pixel_change|cloud_stale|no_tracks|disabled
  int proposals = 0;
  int tracks = 0;  // live tracks after update
  int detections = 0;
  int mined = 0;
  LatencyBreakdown latency;
  bool keyframe = false;
  bool enqueued = false;
  bool uploaded = false;
  std::uint64_t bytes_sent = 0;
  int cloud_results_applied = 0;
};

struct RunSummary {
  double map = 0.0;
  bool map_no_gt = false;
  double mean_latency_s = 0.0;
  double p50_latency_s = 0.0;
  double p95_latency_s = 0.0;
  std::uint64_t bytes_total = 0;
  double mean_proposals = 0.0;
  int upload_count = 0;
  int frames = 0;
  int cloud_results = 0;
  int dropped_stale_results = 0;
  std::vector<std::string> warnings;
};

struct RunResult {
  std::vector<FrameReport> reports;
  RunSummary summary;
  std::vector<NetEvent> net_events;
  std::vector<MiningEvent> mining_events;
  std::vector<std::vector<Detection>> detections_per_frame;
};

// One virtual-clocked run over the frame source: per frame mode choice, fast
// or full edge inference, mining against the reference, tracker update with
// the union, upload decision, cloud result consumption.
RunResult run_scenario(const FrameSource& source,
                       const std::vector<GroundTruth>& gts,
                       const BandwidthTrace& trace, const PipelineConfig& config,
                       const ConfigSet* config_set = nullptr,
                       const PqIndex* pq = nullptr);

RunSummary summarize(const std::vector<FrameReport>& reports,
                     const std::vector<std::vector<Detection>>& dets_per_frame,
                     const std::vector<GroundTruth>& gts);

// reports.jsonl / summary.json / metrics.csv writers (stable field order)
void write_reports_jsonl(const std::vector<FrameReport>& reports,
                         const std::string& path);
void write_summary_json(const RunSummary& summary, const std::string& path);
void write_metrics_csv(const std::vector<FrameReport>& reports,
                       const std::string& path);
void write_net_events_jsonl(const std::vector<NetEvent>& events,
                            const std::string& path);
void write_mining_events_jsonl(const std::vector<MiningEvent>& events,
                               const std::string& path);

}  // namespace cloudeye
