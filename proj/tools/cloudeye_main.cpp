// cloudeye CLI: scenario runs, offline config profiling, single-frame
// encode/decode, synthetic scenario generation, and ablation sweeps.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>

#include "cloudeye/config_set.hpp"
#include "cloudeye/jpeg_codec.hpp"
#include "cloudeye/pipeline.hpp"
#include "cloudeye/pq_index.hpp"
#include "cloudeye/roi_encode.hpp"
#include "cloudeye/scenario.hpp"
#include "cloudeye/scenario_file.hpp"

namespace fs = std::filesystem;
using namespace cloudeye;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidInput = 2;
constexpr int kExitTraceMissing = 3;

bool log_enabled() {
  const char* v = std::getenv("CLOUDEYE_LOG");
  return v && *v && std::string(v) != "0";
}

void log_line(const std::string& msg) {
  if (log_enabled()) std::fprintf(stderr, "[cloudeye] %s\n", msg.c_str());
}

// --toggle fast|mine|qe=on|off, repeatable
int apply_toggles(const std::vector<std::string>& toggles, ModuleToggles& out) {
  for (const auto& t : toggles) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "bad --toggle '%s': expected name=on|off\n", t.c_str());
      return kExitInvalidInput;
    }
    const std::string name = t.substr(0, eq);
    const std::string value = t.substr(eq + 1);
    if (value != "on" && value != "off") {
      std::fprintf(stderr, "bad --toggle value '%s'\n", t.c_str());
      return kExitInvalidInput;
    }
    const bool on = value == "on";
    if (name == "fast") out.fast_inference_on = on;
    else if (name == "mine") out.mining_on = on;
    else if (name == "qe") out.quality_encode_on = on;
    else {
      std::fprintf(stderr, "unknown toggle '%s' (fast|mine|qe)\n", name.c_str());
      return kExitInvalidInput;
    }
  }
  return kExitOk;
}

struct LoadedScenario {
  ScenarioFile file;
  std::unique_ptr<FrameSource> source;
  std::vector<GroundTruth> gts;
  BandwidthTrace trace;
  std::optional<ConfigSet> config_set;
  std::optional<PqIndex> pq;
};

int load_runnable(const std::string& scenario_path, std::optional<std::uint64_t> seed,
                  const std::vector<std::string>& toggles, LoadedScenario& out) {
  try {
    out.file = load_scenario_file(scenario_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return kExitInvalidInput;
  }
  if (seed) {
    out.file.seed = *seed;
    out.file.config.seed = *seed;
    if (out.file.synthetic) out.file.synthetic->seed = *seed;
  }
  const int rc = apply_toggles(toggles, out.file.config.toggles);
  if (rc != kExitOk) return rc;

  const auto resolve = [&](const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(scenario_path).parent_path() / p).string();
  };

  try {
    if (out.file.synthetic) {
      auto src = std::make_unique<SyntheticSource>(*out.file.synthetic);
      out.gts = src->ground_truths();
      out.source = std::move(src);
    } else {
      auto src = std::make_unique<DirectorySource>(resolve(out.file.frames_dir),
                                                   out.file.config.fps);
      if (out.file.annotations.empty()) {
        std::fprintf(stderr, "scenario error: frames_dir needs annotations\n");
        return kExitInvalidInput;
      }
      const auto loaded = load_annotations(resolve(out.file.annotations));
      std::map<std::int64_t, GroundTruth> by_id;
      for (const auto& gt : loaded) by_id[gt.frame_id] = gt;
      out.gts.resize(src->count());
      for (std::int64_t i = 0; i < src->count(); ++i) {
        auto it = by_id.find(i);
        out.gts[i] = it == by_id.end() ? GroundTruth{i, {}} : it->second;
      }
      out.source = std::move(src);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return kExitInvalidInput;
  }

  if (out.file.trace.empty()) {
    const double duration =
        static_cast<double>(out.source->count()) / out.file.config.fps + 1.0;
    out.trace = BandwidthTrace::constant(1e6, duration);
  } else {
    const std::string trace_path = resolve(out.file.trace);
    if (!fs::exists(trace_path)) {
      std::fprintf(stderr, "trace missing: %s\n", trace_path.c_str());
      return kExitTraceMissing;
    }
    try {
      out.trace = BandwidthTrace::load_csv(trace_path);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "trace error: %s\n", e.what());
      return kExitTraceMissing;
    }
  }

  try {
    if (!out.file.config_set.empty()) {
      out.config_set = load_config_set(resolve(out.file.config_set));
      if (!out.file.pq_index.empty()) {
        out.pq = PqIndex::load(resolve(out.file.pq_index));
      } else {
        out.pq = PqIndex::build(*out.config_set, PqParams{});
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config set error: %s\n", e.what());
    return kExitInvalidInput;
  }
  return kExitOk;
}

void write_outputs(const RunResult& result, const std::string& out_dir,
                   bool trace_mining) {
  fs::create_directories(out_dir);
  write_reports_jsonl(result.reports, out_dir + "/reports.jsonl");
  write_summary_json(result.summary, out_dir + "/summary.json");
  write_metrics_csv(result.reports, out_dir + "/metrics.csv");
  write_net_events_jsonl(result.net_events, out_dir + "/net_events.jsonl");
  if (trace_mining) {
    write_mining_events_jsonl(result.mining_events, out_dir + "/mining.jsonl");
  }
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed,
            const std::vector<std::string>& toggles) {
  LoadedScenario loaded;
  const int rc = load_runnable(scenario_path, seed, toggles, loaded);
  if (rc != kExitOk) return rc;

  log_line("running scenario " + scenario_path);
  RunResult result;
  try {
    result = run_scenario(*loaded.source, loaded.gts, loaded.trace,
                          loaded.file.config,
                          loaded.config_set ? &*loaded.config_set : nullptr,
                          loaded.pq ? &*loaded.pq : nullptr);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run error: %s\n", e.what());
    return kExitInvalidInput;
  }
  write_outputs(result, out_dir, loaded.file.config.trace_mining);
  std::printf("frames=%d map=%.4f mean_latency_s=%.5f bytes=%llu uploads=%d\n",
              result.summary.frames, result.summary.map,
              result.summary.mean_latency_s,
              static_cast<unsigned long long>(result.summary.bytes_total),
              result.summary.upload_count);
  for (const auto& w : result.summary.warnings) log_line("warning: " + w);
  return kExitOk;
}

int parse_q_list(const std::string& arg, std::vector<std::pair<int, int>>& out) {
  std::stringstream ss(arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      std::fprintf(stderr, "bad --q-list entry '%s': expected q_roi:q_bg\n",
                   item.c_str());
      return kExitInvalidInput;
    }
    out.emplace_back(std::stoi(item.substr(0, colon)),
                     std::stoi(item.substr(colon + 1)));
  }
  return out.empty() ? kExitInvalidInput : kExitOk;
}

int cmd_profile(const std::string& corpus, const std::string& k_arg,
                const std::string& q_arg, const std::string& out_path,
                std::uint64_t seed) {
  std::vector<int> k_list;
  {
    std::stringstream ss(k_arg);
    std::string item;
    while (std::getline(ss, item, ',')) k_list.push_back(std::stoi(item));
  }
  std::vector<std::pair<int, int>> q_list;
  if (k_list.empty() || parse_q_list(q_arg, q_list) != kExitOk) {
    return kExitInvalidInput;
  }

  std::vector<Frame> frames;
  std::vector<GroundTruth> gts;
  try {
    DirectorySource source(corpus, 30.0);
    const auto annos = load_annotations(corpus + "/annotations.jsonl");
    std::map<std::int64_t, GroundTruth> by_id;
    for (const auto& gt : annos) by_id[gt.frame_id] = gt;
    for (std::int64_t i = 0; i < source.count(); ++i) {
      frames.push_back(source.frame(i));
      auto it = by_id.find(i);
      gts.push_back(it == by_id.end() ? GroundTruth{i, {}} : it->second);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "corpus error: %s\n", e.what());
    return kExitInvalidInput;
  }
  if (frames.empty()) {
    std::fprintf(stderr, "corpus error: no frames\n");
    return kExitInvalidInput;
  }

  ProfileParams params;
  params.k_list = k_list;
  params.q_list = q_list;
  CloudModelConfig cloud;
  cloud.base.rng_seed = derive_seed(seed, 0x70726f66ull);

  try {
    const ProfileResult profiled = build_config_set(frames, gts, params, cloud);
    save_config_set(profiled.entries, out_path);
    const PqIndex index = PqIndex::build(profiled.entries, PqParams{4, 16, 25, seed});
    const std::string sidecar =
        fs::path(out_path).replace_extension(".cepq").string();
    index.save(sidecar);
    std::printf("entries=%zu skipped=%d sidecar=%s%s\n", profiled.entries.size(),
                profiled.skipped, sidecar.c_str(),
                index.exhaustive_fallback() ? " (exhaustive fallback)" : "");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "profile error: %s\n", e.what());
    return kExitInvalidInput;
  }
  return kExitOk;
}

int cmd_encode(const std::string& input, const std::string& annotations,
               std::int64_t frame_id, int k, int q_roi, int q_bg,
               const std::string& out_path) {
  try {
    Frame frame = read_png(input);
    frame.id = frame_id;
    std::vector<BoundingBox> boxes;
    if (!annotations.empty()) {
      for (const auto& gt : load_annotations(annotations)) {
        if (gt.frame_id != frame_id) continue;
        for (const auto& b : gt.boxes) boxes.push_back(b.box);
      }
    }
    RoiPlan plan;
    if (boxes.empty()) {
      plan = RoiPlan{1, {}, q_roi, q_bg};
    } else {
      const int capped = std::clamp(k, 1, static_cast<int>(boxes.size()));
      plan = plan_rois(boxes, capped, 16.0, frame.width, frame.height, q_roi, q_bg);
    }
    const EncodedFrame enc = encode_frame(frame, plan);
    const auto bytes = serialize(enc);
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    std::printf("rois=%zu bytes=%zu\n", enc.regions.size(), bytes.size());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "encode error: %s\n", e.what());
    return kExitInvalidInput;
  }
  return kExitOk;
}

int cmd_decode(const std::string& input, const std::string& out_path) {
  try {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + input);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    const Frame frame = decode_frame(deserialize(bytes));
    write_png(out_path, frame);
    std::printf("frame=%lld %dx%d\n", static_cast<long long>(frame.id),
                frame.width, frame.height);
  } catch (const CodecError& e) {
    std::fprintf(stderr, "decode error [%s]: %s\n", e.section().c_str(), e.what());
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "decode error: %s\n", e.what());
    return kExitInvalidInput;
  }
  return kExitOk;
}

int cmd_gen_scenario(const std::string& out_dir, SyntheticSpec spec,
                     double bandwidth) {
  if (spec.frames < 1) {
    std::fprintf(stderr, "gen-scenario error: need at least 1 frame\n");
    return kExitInvalidInput;
  }
  try {
    fs::create_directories(out_dir);
    SyntheticSource source(spec);
    std::vector<GroundTruth> gts = source.ground_truths();
    char name[32];
    for (int i = 0; i < spec.frames; ++i) {
      std::snprintf(name, sizeof name, "frame_%06d.png", i);
      write_png(out_dir + "/" + name, source.frame(i));
    }
    save_annotations(gts, out_dir + "/annotations.jsonl");
    const double duration = spec.frames / spec.fps + 1.0;
    BandwidthTrace::constant(bandwidth, duration).save_csv(out_dir + "/trace.csv");

    ScenarioFile scenario;
    scenario.seed = spec.seed;
    scenario.frames_dir = ".";
    scenario.annotations = "annotations.jsonl";
    scenario.trace = "trace.csv";
    save_scenario_file(scenario, out_dir + "/scenario.json");
    std::printf("frames=%d targets=%d dir=%s\n", spec.frames, spec.targets,
                out_dir.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gen-scenario error: %s\n", e.what());
    return kExitInvalidInput;
  }
  return kExitOk;
}

int cmd_sweep(const std::string& scenario_path, const std::string& out_dir,
              const std::string& bw_arg, int jobs,
              std::optional<std::uint64_t> seed) {
  std::vector<double> bw_scales;
  {
    std::stringstream ss(bw_arg);
    std::string item;
    while (std::getline(ss, item, ',')) bw_scales.push_back(std::stod(item));
  }
  if (bw_scales.empty() || jobs < 1) {
    std::fprintf(stderr, "sweep error: bad bandwidth list or jobs\n");
    return kExitInvalidInput;
  }

  struct Cell {
    bool fast, mine, qe;
    double bw_scale;
    RunSummary summary;
    bool ok = false;
  };
  std::vector<Cell> grid;
  for (bool fast : {false, true}) {
    for (bool mine : {false, true}) {
      for (bool qe : {false, true}) {
        for (double bw : bw_scales) grid.push_back({fast, mine, qe, bw, {}, false});
      }
    }
  }

  fs::create_directories(out_dir);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size() || failed.load()) break;
      Cell& cell = grid[i];
      LoadedScenario loaded;
      if (load_runnable(scenario_path, seed, {}, loaded) != kExitOk) {
        failed.store(true);
        break;
      }
      loaded.file.config.toggles = {cell.fast, cell.mine, cell.qe};
      BandwidthTrace trace = loaded.trace;
      for (auto& s : trace.samples) s.bytes_per_s *= cell.bw_scale;
      char tag[64];
      std::snprintf(tag, sizeof tag, "fast%d_mine%d_qe%d_bw%g", cell.fast,
                    cell.mine, cell.qe, cell.bw_scale);
      try {
        const RunResult result =
            run_scenario(*loaded.source, loaded.gts, trace, loaded.file.config,
                         loaded.config_set ? &*loaded.config_set : nullptr,
                         loaded.pq ? &*loaded.pq : nullptr);
        write_outputs(result, out_dir + "/" + tag, false);
        cell.summary = result.summary;
        cell.ok = true;
      } catch (const std::exception& e) {
        std::fprintf(stderr, "sweep cell %s failed: %s\n", tag, e.what());
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failed.load()) return kExitInvalidInput;

  // long-format CSV in grid order, independent of worker scheduling
  std::ofstream csv(out_dir + "/sweep.csv", std::ios::trunc);
  csv << "fast,mine,qe,bw_scale,map,mean_latency_s,p50_latency_s,p95_latency_s,"
         "bytes_total,uploads,cloud_results,frames\n";
  for (const auto& c : grid) {
    csv << (c.fast ? 1 : 0) << "," << (c.mine ? 1 : 0) << "," << (c.qe ? 1 : 0)
        << "," << c.bw_scale << "," << c.summary.map << ","
        << c.summary.mean_latency_s << "," << c.summary.p50_latency_s << ","
        << c.summary.p95_latency_s << "," << c.summary.bytes_total << ","
        << c.summary.upload_count << "," << c.summary.cloud_results << ","
        << c.summary.frames << "\n";
  }
  std::printf("cells=%zu out=%s/sweep.csv\n", grid.size(), out_dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cloudeye: edge-cloud video analytics pipeline (desk-scale)"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario end to end");
  std::string run_scenario_path, run_out = "out";
  std::optional<std::uint64_t> run_seed;
  std::vector<std::string> run_toggles;
  run->add_option("--scenario", run_scenario_path, "scenario JSON")->required();
  run->add_option("--out", run_out, "output directory");
  run->add_option("--seed", run_seed, "override the scenario seed");
  run->add_option("--toggle", run_toggles, "fast|mine|qe=on|off (repeatable)");

  auto* profile = app.add_subcommand("profile", "build the offline config set");
  std::string prof_corpus, prof_out = "configs.jsonl";
  std::string prof_k = "1,2,3,4", prof_q = "90:20,90:50,70:20,50:10";
  std::uint64_t prof_seed = 1;
  profile->add_option("--corpus", prof_corpus, "frames dir with annotations.jsonl")
      ->required();
  profile->add_option("--k-list", prof_k, "cluster counts, comma separated");
  profile->add_option("--q-list", prof_q, "q_roi:q_bg pairs, comma separated");
  profile->add_option("--out", prof_out, "config set JSONL path");
  profile->add_option("--seed", prof_seed, "profiling seed");

  auto* encode = app.add_subcommand("encode", "ROI-encode one PNG frame");
  std::string enc_input, enc_annos, enc_out = "frame.ceye";
  std::int64_t enc_frame_id = 0;
  int enc_k = 2, enc_q_roi = 90, enc_q_bg = 20;
  encode->add_option("--input", enc_input, "input PNG")->required();
  encode->add_option("--annotations", enc_annos, "annotations JSONL for ROI boxes");
  encode->add_option("--frame-id", enc_frame_id, "frame id in the annotations");
  encode->add_option("--k", enc_k, "cluster count");
  encode->add_option("--q-roi", enc_q_roi, "ROI quality");
  encode->add_option("--q-bg", enc_q_bg, "background quality");
  encode->add_option("--out", enc_out, "output payload path");

  auto* decode = app.add_subcommand("decode", "decode a CEYE payload to PNG");
  std::string dec_input, dec_out = "frame.png";
  decode->add_option("--input", dec_input, "CEYE payload")->required();
  decode->add_option("--out", dec_out, "output PNG");

  auto* gen = app.add_subcommand("gen-scenario", "generate a synthetic corpus");
  std::string gen_out = "scenario";
  SyntheticSpec gen_spec;
  double gen_bw = 1e6;
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--frames", gen_spec.frames, "frame count");
  gen->add_option("--targets", gen_spec.targets, "target count");
  gen->add_option("--width", gen_spec.width, "frame width");
  gen->add_option("--height", gen_spec.height, "frame height");
  gen->add_option("--speed-min", gen_spec.speed_min, "min speed px/frame");
  gen->add_option("--speed-max", gen_spec.speed_max, "max speed px/frame");
  gen->add_option("--size-min", gen_spec.size_min, "min target side px");
  gen->add_option("--size-max", gen_spec.size_max, "max target side px");
  gen->add_option("--fps", gen_spec.fps, "frames per second");
  gen->add_option("--seed", gen_spec.seed, "scene seed");
  gen->add_option("--bandwidth", gen_bw, "trace bandwidth bytes/s");

  auto* sweep = app.add_subcommand("sweep", "toggle/bandwidth ablation grid");
  std::string sweep_scenario, sweep_out = "sweep";
  std::string sweep_bw = "0.5,1,2";
  int sweep_jobs = 1;
  std::optional<std::uint64_t> sweep_seed;
  sweep->add_option("--scenario", sweep_scenario, "scenario JSON")->required();
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_option("--bandwidth-scales", sweep_bw, "comma separated multipliers");
  sweep->add_option("--jobs", sweep_jobs, "parallel workers");
  sweep->add_option("--seed", sweep_seed, "override the scenario seed");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(run_scenario_path, run_out, run_seed, run_toggles);
  if (profile->parsed()) {
    return cmd_profile(prof_corpus, prof_k, prof_q, prof_out, prof_seed);
  }
  if (encode->parsed()) {
    return cmd_encode(enc_input, enc_annos, enc_frame_id, enc_k, enc_q_roi,
                      enc_q_bg, enc_out);
  }
  if (decode->parsed()) return cmd_decode(dec_input, dec_out);
  if (gen->parsed()) return cmd_gen_scenario(gen_out, gen_spec, gen_bw);
  if (sweep->parsed()) {
    return cmd_sweep(sweep_scenario, sweep_out, sweep_bw, sweep_jobs, sweep_seed);
  }
  return kExitOk;
}
