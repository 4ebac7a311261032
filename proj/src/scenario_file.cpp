#include "cloudeye/scenario_file.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace cloudeye {

namespace {

using nlohmann::json;

SyntheticSpec synthetic_from_json(const json& j, std::uint64_t default_seed) {
  SyntheticSpec spec;
  spec.frames = j.value("frames", spec.frames);
  spec.width = j.value("width", spec.width);
  spec.height = j.value("height", spec.height);
  spec.targets = j.value("targets", spec.targets);
  spec.speed_min = j.value("speed_min", spec.speed_min);
  spec.speed_max = j.value("speed_max", spec.speed_max);
  spec.size_min = j.value("size_min", spec.size_min);
  spec.size_max = j.value("size_max", spec.size_max);
  spec.fps = j.value("fps", spec.fps);
  spec.seed = j.value("seed", default_seed);
  if (j.contains("targets_explicit")) {
    for (const auto& t : j.at("targets_explicit")) {
      TargetSpec ts;
      ts.x0 = t.value("x0", 0.0);
      ts.y0 = t.value("y0", 0.0);
      ts.vx = t.value("vx", 0.0);
      ts.vy = t.value("vy", 0.0);
      ts.w = t.value("w", 32.0);
      ts.h = t.value("h", 32.0);
      ts.class_id = t.value("class_id", 0);
      spec.explicit_targets.push_back(ts);
    }
  }
  return spec;
}

PipelineConfig config_from_json(const json& j, std::uint64_t seed) {
  PipelineConfig c;
  c.seed = seed;
  if (j.contains("tracker")) {
    const auto& t = j.at("tracker");
    c.tracker.process_noise_scale = t.value("process_noise_scale", c.tracker.process_noise_scale);
    c.tracker.measurement_noise_scale = t.value("measurement_noise_scale", c.tracker.measurement_noise_scale);
    c.tracker.max_time_since_update = t.value("max_time_since_update", c.tracker.max_time_since_update);
    c.tracker.min_hits = t.value("min_hits", c.tracker.min_hits);
    c.tracker.full_infer_pixel_threshold = t.value("full_infer_pixel_threshold", c.tracker.full_infer_pixel_threshold);
    c.tracker.cloud_staleness_limit = t.value("cloud_staleness_limit", c.tracker.cloud_staleness_limit);
    c.tracker.association_iou = t.value("association_iou", c.tracker.association_iou);
  }
  if (j.contains("mining")) {
    const auto& m = j.at("mining");
    c.mining.l_padding = m.value("l_padding", c.mining.l_padding);
    c.mining.depth = m.value("depth", c.mining.depth);
    c.mining.epsilon = m.value("epsilon", c.mining.epsilon);
    c.mining.occlusion_threshold = m.value("occlusion_threshold", c.mining.occlusion_threshold);
    c.mining.penalty_weight = m.value("penalty_weight", c.mining.penalty_weight);
    c.mining.reference_staleness_threshold = m.value("reference_staleness_threshold", c.mining.reference_staleness_threshold);
    c.mining.duplicate_iou = m.value("duplicate_iou", c.mining.duplicate_iou);
    c.mining.track_link_iou = m.value("track_link_iou", c.mining.track_link_iou);
    c.mining.conf_scale_small = m.value("conf_scale_small", c.mining.conf_scale_small);
    c.mining.conf_scale_large = m.value("conf_scale_large", c.mining.conf_scale_large);
    c.mining.conf_tau_small = m.value("conf_tau_small", c.mining.conf_tau_small);
    c.mining.conf_tau_large = m.value("conf_tau_large", c.mining.conf_tau_large);
    c.mining.small_area_threshold = m.value("small_area_threshold", c.mining.small_area_threshold);
  }
  if (j.contains("extractor")) {
    const auto& e = j.at("extractor");
    c.extractor.strides = e.value("strides", c.extractor.strides);
    c.extractor.channels = e.value("channels", c.extractor.channels);
    c.extractor.seed = e.value("seed", seed);
  } else {
    c.extractor.seed = seed;
  }
  auto scripted = [](const json& s, ScriptedModelConfig base, std::uint64_t default_seed) {
    base.miss_rate_small = s.value("miss_rate_small", base.miss_rate_small);
    base.miss_rate_large = s.value("miss_rate_large", base.miss_rate_large);
    base.small_area_threshold = s.value("small_area_threshold", base.small_area_threshold);
    base.box_jitter_sigma = s.value("box_jitter_sigma", base.box_jitter_sigma);
    base.confidence_noise_sigma = s.value("confidence_noise_sigma", base.confidence_noise_sigma);
    base.latency_s = s.value("latency_s", base.latency_s);
    base.rng_seed = s.value("rng_seed", default_seed);
    return base;
  };
  c.edge_model.rng_seed = derive_seed(seed, 0x65646765ull);
  if (j.contains("edge_model")) {
    c.edge_model = scripted(j.at("edge_model"), c.edge_model, c.edge_model.rng_seed);
  }
  c.cloud_model.base.rng_seed = derive_seed(seed, 0x636c6f7564ull);
  if (j.contains("cloud_model")) {
    const auto& cm = j.at("cloud_model");
    c.cloud_model.base = scripted(cm, c.cloud_model.base, c.cloud_model.base.rng_seed);
    c.cloud_model.psnr_mid_db = cm.value("psnr_mid_db", c.cloud_model.psnr_mid_db);
    c.cloud_model.psnr_width_db = cm.value("psnr_width_db", c.cloud_model.psnr_width_db);
    c.cloud_model.psnr_sat_db = cm.value("psnr_sat_db", c.cloud_model.psnr_sat_db);
  }
  if (j.contains("cost")) {
    const auto& k = j.at("cost");
    c.cost.extract_per_mpx_s = k.value("extract_per_mpx_s", c.cost.extract_per_mpx_s);
    c.cost.regress_per_proposal_s = k.value("regress_per_proposal_s", c.cost.regress_per_proposal_s);
    c.cost.full_infer_proposals = k.value("full_infer_proposals", c.cost.full_infer_proposals);
    c.cost.mine_per_cell_s = k.value("mine_per_cell_s", c.cost.mine_per_cell_s);
    c.cost.cluster_per_box_k_s = k.value("cluster_per_box_k_s", c.cost.cluster_per_box_k_s);
    c.cost.encode_per_mpx_s = k.value("encode_per_mpx_s", c.cost.encode_per_mpx_s);
  }
  if (j.contains("queue")) {
    const auto& q = j.at("queue");
    c.queue.max_queue = q.value("max_queue", c.queue.max_queue);
    c.queue.send_window_s = q.value("send_window_s", c.queue.send_window_s);
    c.queue.keyframe_boost = q.value("keyframe_boost", c.queue.keyframe_boost);
  }
  c.rtt_s = j.value("rtt_s", c.rtt_s);
  c.cloud_latency_s = j.value("cloud_latency_s", c.cloud_latency_s);
  c.latency_budget_s = j.value("latency_budget_s", c.latency_budget_s);
  const std::string fb = j.value("fallback", std::string("smallest_size"));
  if (fb == "skip") c.fallback = FallbackPolicy::Skip;
  else if (fb == "smallest_size") c.fallback = FallbackPolicy::SmallestSize;
  else throw std::runtime_error("config.fallback must be smallest_size or skip");
  c.grid_g = j.value("grid_g", c.grid_g);
  c.roi_padding = j.value("roi_padding", c.roi_padding);
  c.default_k = j.value("default_k", c.default_k);
  c.default_q_roi = j.value("default_q_roi", c.default_q_roi);
  c.default_q_bg = j.value("default_q_bg", c.default_q_bg);
  c.uniform_q = j.value("uniform_q", c.uniform_q);
  c.query_top_n = j.value("query_top_n", c.query_top_n);
  c.cache_size = j.value("cache_size", c.cache_size);
  c.fps = j.value("fps", c.fps);
  if (j.contains("toggles")) {
    const auto& t = j.at("toggles");
    c.toggles.fast_inference_on = t.value("fast_inference", true);
    c.toggles.mining_on = t.value("mining", true);
    c.toggles.quality_encode_on = t.value("quality_encode", true);
  }
  c.trace_mining = j.value("trace_mining", c.trace_mining);
  return c;
}

}  // namespace

ScenarioFile load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open scenario file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& err) {
    // byte offset anchored by nlohmann; prefix the path for the caller
    throw std::runtime_error(path + ": " + err.what());
  }

  ScenarioFile s;
  s.seed = j.value("seed", 1ull);
  if (j.contains("synthetic")) {
    s.synthetic = synthetic_from_json(j.at("synthetic"), s.seed);
  }
  s.frames_dir = j.value("frames_dir", std::string{});
  s.annotations = j.value("annotations", std::string{});
  s.trace = j.value("trace", std::string{});
  s.config_set = j.value("config_set", std::string{});
  s.pq_index = j.value("pq_index", std::string{});
  if (!s.synthetic && s.frames_dir.empty()) {
    throw std::runtime_error(path + ": scenario needs synthetic spec or frames_dir");
  }
  s.config = config_from_json(j.value("config", json::object()), s.seed);
  s.config.fps = s.synthetic ? s.synthetic->fps : s.config.fps;
  return s;
}

void save_scenario_file(const ScenarioFile& s, const std::string& path) {
  nlohmann::ordered_json j;
  j["seed"] = s.seed;
  if (s.synthetic) {
    const auto& sp = *s.synthetic;
    nlohmann::ordered_json syn{{"frames", sp.frames}, {"width", sp.width},
                               {"height", sp.height}, {"targets", sp.targets},
                               {"speed_min", sp.speed_min}, {"speed_max", sp.speed_max},
                               {"size_min", sp.size_min}, {"size_max", sp.size_max},
                               {"fps", sp.fps},           {"seed", sp.seed}};
    if (!sp.explicit_targets.empty()) {
      nlohmann::ordered_json targets = nlohmann::json::array();
      for (const auto& t : sp.explicit_targets) {
        targets.push_back({{"x0", t.x0}, {"y0", t.y0}, {"vx", t.vx}, {"vy", t.vy},
                           {"w", t.w},   {"h", t.h},   {"class_id", t.class_id}});
      }
      syn["targets_explicit"] = targets;
    }
    j["synthetic"] = syn;
  }
  if (!s.frames_dir.empty()) j["frames_dir"] = s.frames_dir;
  if (!s.annotations.empty()) j["annotations"] = s.annotations;
  if (!s.trace.empty()) j["trace"] = s.trace;
  if (!s.config_set.empty()) j["config_set"] = s.config_set;
  if (!s.pq_index.empty()) j["pq_index"] = s.pq_index;
  j["config"] = nlohmann::ordered_json::object();

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace cloudeye
