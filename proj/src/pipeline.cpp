#include "cloudeye/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "cloudeye/metrics.hpp"
#include "cloudeye/roi_encode.hpp"

namespace cloudeye {

namespace {

double nearest_rank(std::vector<double> values, double pct) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(pct / 100.0 * static_cast<double>(values.size())));
  return values[std::min(values.size() - 1, rank == 0 ? 0 : rank - 1)];
}

}  // namespace

RunResult run_scenario(const FrameSource& source,
                       const std::vector<GroundTruth>& gts,
                       const BandwidthTrace& trace, const PipelineConfig& config,
                       const ConfigSet* config_set, const PqIndex* pq) {
  if (static_cast<std::int64_t>(gts.size()) != source.count()) {
    throw std::invalid_argument("run_scenario: frames and ground truth misaligned");
  }
  if (trace.samples.empty()) {
    throw std::invalid_argument("run_scenario: empty bandwidth trace");
  }

  RunResult result;
  std::int64_t n = source.count();
  const double duration = n > 0 ? static_cast<double>(n - 1) / config.fps : 0.0;
  if (trace.horizon() < duration) {
    const std::int64_t covered =
        static_cast<std::int64_t>(std::floor(trace.horizon() * config.fps)) + 1;
    n = std::clamp<std::int64_t>(covered, 0, n);
    result.summary.warnings.push_back("trace shorter than run: truncated to " +
                                      std::to_string(n) + " frames");
  }

  AnnotationTable annotations(gts);
  ScriptedEdgeModel edge(config.edge_model, config.extractor, &annotations);
  Tracker tracker(config.tracker);
  FrameCache cache(static_cast<std::size_t>(config.cache_size));
  std::optional<ReferenceFrame> reference;
  MiningParams mining = config.mining;
  NetSim netsim(trace, {config.queue, config.rtt_s, config.cloud_latency_s,
                        derive_seed(config.seed, 0x6e6574ull)});

  int frames_since_cloud = 0;
  Frame prev;

  for (std::int64_t i = 0; i < n; ++i) {
    Frame frame = source.frame(i);
    const double now = frame.timestamp;
    const GroundTruth& gt = gts[static_cast<std::size_t>(i)];

    FrameReport report;
    report.frame_id = frame.id;

    // 1. inference mode
    const Frame& prev_ref = i == 0 ? frame : prev;
    InferenceMode mode = choose_mode(prev_ref, frame, tracker.empty(),
                                     frames_since_cloud, config.tracker);
    if (!config.toggles.fast_inference_on) {
      mode = {false, FullReason::None};
      report.reason = "disabled";
    } else {
      report.reason = to_string(mode.reason);
    }
    report.fast = mode.fast;
    report.keyframe =
        i == 0 ||
        frame_diff(prev_ref, frame) > config.tracker.full_infer_pixel_threshold;

    // 2. edge inference (features extracted once, reused by mining and cache)
    FeatureMap features = edge.extract(frame);
    report.latency.extract_s =
        config.cost.extract_per_mpx_s *
        (static_cast<double>(frame.width) * frame.height / 1e6);

    const auto predictions = tracker.predict();
    std::vector<Detection> base_dets;
    if (mode.fast) {
      std::vector<BoundingBox> proposal_boxes;
      proposal_boxes.reserve(predictions.size());
      for (const auto& [id, b] : predictions) proposal_boxes.push_back(b);
      base_dets = edge.regress(proposal_boxes, features, frame);
      for (auto& d : base_dets) {
        d.box = d.box.clamped(frame.width, frame.height);
        d.source = Source::Tracked;
      }
      report.proposals = static_cast<int>(predictions.size());
      report.latency.regress_s =
          config.cost.regress_per_proposal_s * report.proposals;
    } else {
      base_dets = edge.full_infer(frame);
      report.latency.regress_s =
          config.cost.regress_per_proposal_s * config.cost.full_infer_proposals;
    }

    // 3. feature mining against the reference frame
    std::vector<Detection> final_dets = base_dets;
    if (config.toggles.mining_on && reference && reference->valid()) {
      MineOutcome mined = mine_frame(
          features, base_dets, predictions, *reference, mining,
          config.trace_mining ? &result.mining_events : nullptr);
      final_dets = std::move(mined.detections);
      report.mined = mined.mined;
      report.latency.mine_s = config.cost.mine_per_cell_s * mined.cells_searched;
    }

    // 4. tracker update with the union
    {
      std::vector<BoundingBox> pred_boxes, det_boxes;
      pred_boxes.reserve(predictions.size());
      for (const auto& [id, b] : predictions) pred_boxes.push_back(b);
      det_boxes.reserve(final_dets.size());
      for (const auto& d : final_dets) det_boxes.push_back(d.box);
      const auto pairs = greedy_iou_match(pred_boxes, det_boxes,
                                          config.tracker.association_iou);
      std::vector<std::pair<int, Detection>> matched;
      std::vector<bool> used(final_dets.size(), false);
      for (const auto& [pi, di] : pairs) {
        matched.emplace_back(predictions[pi].first, final_dets[di]);
        used[di] = true;
      }
      std::vector<Detection> unmatched;
      for (std::size_t d = 0; d < final_dets.size(); ++d) {
        if (!used[d]) unmatched.push_back(final_dets[d]);
      }
      tracker.update(matched, unmatched);
    }
    report.tracks = static_cast<int>(tracker.size());
    report.detections = static_cast<int>(final_dets.size());

    cache.push(frame, std::move(features), final_dets);

    // 5. upload decision: every frame is a queue candidate; quality encode
    //    selects (K, Q) through the config library when one is loaded
    {
      bool skip_upload = false;
      RoiPlan plan;
      std::vector<BoundingBox> boxes;
      boxes.reserve(final_dets.size());
      for (const auto& d : final_dets) boxes.push_back(d.box);

      if (config.toggles.quality_encode_on) {
        int k = config.default_k;
        int q_roi = config.default_q_roi;
        int q_bg = config.default_q_bg;
        if (config_set && pq && !config_set->empty()) {
          const auto emb = embed(boxes, frame.width, frame.height, config.grid_g);
          const auto candidates =
              query_configs(*pq, *config_set, emb, config.query_top_n);
          const BudgetParams budget{netsim.bandwidth_estimate(now),
                                    config.latency_budget_s, config.fallback};
          const Selection sel = select_config(candidates, budget);
          if (!sel.entry) {
            skip_upload = true;
          } else {
            k = sel.entry->k;
            q_roi = sel.entry->q_roi;
            q_bg = sel.entry->q_bg;
          }
        }
        if (!skip_upload) {
          if (boxes.empty()) {
            plan = RoiPlan{1, {}, q_roi, q_bg};
          } else {
            k = std::clamp(k, 1, static_cast<int>(boxes.size()));
            plan = plan_rois(boxes, k, config.roi_padding, frame.width,
                             frame.height, q_roi, q_bg);
          }
          double roi_mpx = 0.0;
          for (const auto& r : plan.rois) roi_mpx += r.area() / 1e6;
          const double bg_mpx =
              static_cast<double>(frame.width) * frame.height / 1e6;
          report.latency.encode_s =
              config.cost.t_cluster(static_cast<int>(boxes.size()), plan.clusters_k) +
              config.cost.t_encode(bg_mpx + roi_mpx);
        }
      } else {
        plan = RoiPlan{1, {}, config.uniform_q, config.uniform_q};
        report.latency.encode_s = config.cost.t_encode(
            static_cast<double>(frame.width) * frame.height / 1e6);
      }

      if (!skip_upload) {
        EncodedFrame enc = encode_frame(frame, plan);
        const Frame decoded = decode_frame(enc);
        UploadQueueItem item;
        item.frame_id = frame.id;
        item.is_keyframe = report.keyframe;
        item.enqueue_time = now;
        item.payload = serialize(enc);
        item.k = plan.clusters_k;
        item.q_roi = plan.q_roi;
        item.q_bg = plan.q_bg;
        item.cloud_detections = cloud_infer(decoded, frame, gt, config.cloud_model);
        const bool queue_was_empty = netsim.queue().empty();
        report.enqueued = netsim.enqueue(std::move(item), now);
        // keyframes on an empty queue bypass the probabilistic gate
        if (report.keyframe && queue_was_empty && netsim.link_idle(now)) {
          netsim.force_send(now);
        } else {
          netsim.tick(now);
        }
      } else {
        netsim.tick(now);
      }
    }

    // 6. consume cloud results whose completion time has passed
    int applied = 0;
    for (const auto& cloud : netsim.collect(now)) {
      ++result.summary.cloud_results;
      const RefreshResult refresh = refresh_reference(
          cache, cloud.frame_id, cloud.detections, mining, tracker.mean_speed());
      mining.reference_staleness_threshold = refresh.new_staleness_threshold;
      if (refresh.evicted) {
        ++result.summary.dropped_stale_results;
      } else {
        reference = refresh.reference;
        ++applied;
      }
    }
    report.cloud_results_applied = applied;
    frames_since_cloud = applied > 0 ? 0 : frames_since_cloud + 1;

    result.reports.push_back(std::move(report));
    result.detections_per_frame.push_back(std::move(final_dets));
    prev = std::move(frame);
  }

  // resolve upload outcomes from the event log
  std::map<std::int64_t, std::pair<double, std::uint64_t>> sent;  // id -> (t, bytes)
  std::map<std::int64_t, double> enqueued_at;
  for (const auto& e : netsim.events()) {
    if (e.event == "send_start") sent[e.frame_id] = {e.t, e.bytes};
    else if (e.event == "enqueue") enqueued_at[e.frame_id] = e.t;
  }
  for (auto& report : result.reports) {
    auto it = sent.find(report.frame_id);
    if (it != sent.end()) {
      report.uploaded = true;
      report.bytes_sent = it->second.second;
      report.latency.queue_wait_s = it->second.first - enqueued_at[report.frame_id];
    }
  }

  result.net_events = netsim.events();
  std::vector<GroundTruth> gts_used(gts.begin(), gts.begin() + n);
  RunSummary summary = summarize(result.reports, result.detections_per_frame, gts_used);
  summary.warnings.insert(summary.warnings.end(),
                          result.summary.warnings.begin(),
                          result.summary.warnings.end());
  summary.cloud_results = result.summary.cloud_results;
  summary.dropped_stale_results = result.summary.dropped_stale_results;
  result.summary = std::move(summary);
  return result;
}

RunSummary summarize(const std::vector<FrameReport>& reports,
                     const std::vector<std::vector<Detection>>& dets_per_frame,
                     const std::vector<GroundTruth>& gts) {
  if (reports.empty()) {
    throw std::invalid_argument("summarize: no reports");
  }
  RunSummary s;
  s.frames = static_cast<int>(reports.size());

  std::vector<double> latencies;
  latencies.reserve(reports.size());
  double latency_sum = 0.0, proposal_sum = 0.0;
  for (const auto& r : reports) {
    const double l = r.latency.processing();
    latencies.push_back(l);
    latency_sum += l;
    proposal_sum += r.proposals;
    s.bytes_total += r.bytes_sent;
    if (r.uploaded) ++s.upload_count;
  }
  s.mean_latency_s = latency_sum / static_cast<double>(reports.size());
  s.p50_latency_s = nearest_rank(latencies, 50.0);
  s.p95_latency_s = nearest_rank(latencies, 95.0);
  s.mean_proposals = proposal_sum / static_cast<double>(reports.size());

  const MapResult map = evaluate_map(dets_per_frame, gts);
  s.map = map.value;
  s.map_no_gt = map.no_gt;
  return s;
}

namespace {

nlohmann::ordered_json report_to_json(const FrameReport& r) {
  return {{"frame", r.frame_id},
          {"mode", r.fast ? "fast" : "full"},
          {"reason", r.reason},
          {"proposals", r.proposals},
          {"tracks", r.tracks},
          {"detections", r.detections},
          {"mined", r.mined},
          {"latency",
           {{"extract", r.latency.extract_s},
            {"regress", r.latency.regress_s},
            {"mine", r.latency.mine_s},
            {"encode", r.latency.encode_s},
            {"queue_wait", r.latency.queue_wait_s}}},
          {"keyframe", r.keyframe},
          {"enqueued", r.enqueued},
          {"uploaded", r.uploaded},
          {"bytes_sent", r.bytes_sent},
          {"cloud_results_applied", r.cloud_results_applied}};
}

}  // namespace

void write_reports_jsonl(const std::vector<FrameReport>& reports,
                         const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_reports_jsonl: cannot open " + path);
  for (const auto& r : reports) out << report_to_json(r).dump() << "\n";
}

void write_summary_json(const RunSummary& s, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_summary_json: cannot open " + path);
  nlohmann::ordered_json j{{"map", s.map},
                           {"map_no_gt", s.map_no_gt},
                           {"mean_latency_s", s.mean_latency_s},
                           {"p50_latency_s", s.p50_latency_s},
                           {"p95_latency_s", s.p95_latency_s},
                           {"bytes_total", s.bytes_total},
                           {"mean_proposals", s.mean_proposals},
                           {"upload_count", s.upload_count},
                           {"frames", s.frames},
                           {"cloud_results", s.cloud_results},
                           {"dropped_stale_results", s.dropped_stale_results},
                           {"warnings", s.warnings}};
  out << j.dump(2) << "\n";
}

void write_metrics_csv(const std::vector<FrameReport>& reports,
                       const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
  out << "frame,mode,reason,proposals,tracks,detections,mined,extract_s,"
         "regress_s,mine_s,encode_s,queue_wait_s,keyframe,enqueued,uploaded,"
         "bytes_sent,cloud_results_applied\n";
  for (const auto& r : reports) {
    out << r.frame_id << "," << (r.fast ? "fast" : "full") << "," << r.reason
        << "," << r.proposals << "," << r.tracks << "," << r.detections << ","
        << r.mined << "," << r.latency.extract_s << "," << r.latency.regress_s
        << "," << r.latency.mine_s << "," << r.latency.encode_s << ","
        << r.latency.queue_wait_s << "," << (r.keyframe ? 1 : 0) << ","
        << (r.enqueued ? 1 : 0) << "," << (r.uploaded ? 1 : 0) << ","
        << r.bytes_sent << "," << r.cloud_results_applied << "\n";
  }
}

void write_net_events_jsonl(const std::vector<NetEvent>& events,
                            const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_net_events_jsonl: cannot open " + path);
  for (const auto& e : events) {
    nlohmann::ordered_json j{{"event", e.event},
                             {"t", e.t},
                             {"frame_id", e.frame_id},
                             {"bytes", e.bytes}};
    out << j.dump() << "\n";
  }
}

void write_mining_events_jsonl(const std::vector<MiningEvent>& events,
                               const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_mining_events_jsonl: cannot open " + path);
  for (const auto& e : events) {
    nlohmann::ordered_json j{{"frame", e.frame_id},
                             {"target", e.target},
                             {"rounds", e.rounds},
                             {"group_loss", e.group_loss},
                             {"conservative", e.conservative},
                             {"matched", e.matched},
                             {"confidence", e.confidence}};
    out << j.dump() << "\n";
  }
}

}  // namespace cloudeye
