#include "cloudeye/config_set.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "cloudeye/metrics.hpp"
#include "cloudeye/roi_encode.hpp"

namespace cloudeye {

ProfileResult build_config_set(const std::vector<Frame>& frames,
                               const std::vector<GroundTruth>& gts,
                               const ProfileParams& params,
                               const CloudModelConfig& cloud) {
  if (frames.size() != gts.size()) {
    throw std::invalid_argument("build_config_set: frames/gts mismatch");
  }
  ProfileResult result;
  std::int64_t next_id = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const Frame& frame = frames[f];
    const GroundTruth& gt = gts[f];
    std::vector<BoundingBox> boxes;
    boxes.reserve(gt.boxes.size());
    for (const auto& b : gt.boxes) boxes.push_back(b.box);
    const auto emb = embed(boxes, frame.width, frame.height, params.grid_g);

    for (int k : params.k_list) {
      if (k > static_cast<int>(boxes.size())) {
        ++result.skipped;
        continue;
      }
      for (const auto& [q_roi, q_bg] : params.q_list) {
        const RoiPlan plan = plan_rois(boxes, k, params.roi_padding, frame.width,
                                       frame.height, q_roi, q_bg);
        const EncodedFrame enc = encode_frame(frame, plan);
        const Frame decoded = decode_frame(enc);
        const auto dets = cloud_infer(decoded, frame, gt, cloud);
        const MapResult ap = evaluate_map({dets}, {gt});

        double roi_mpx = 0.0;
        for (const auto& r : enc.regions) {
          roi_mpx += static_cast<double>(r.w) * r.h / 1e6;
        }
        const double bg_mpx = static_cast<double>(frame.width) * frame.height / 1e6;

        ConfigEntry entry;
        entry.id = next_id++;
        entry.embedding = emb;
        entry.k = k;
        entry.q_roi = q_roi;
        entry.q_bg = q_bg;
        entry.accuracy = ap.value;
        entry.payload_size = enc.total_size();
        entry.t_cluster_s = params.cost.t_cluster(static_cast<int>(boxes.size()), k);
        entry.t_encode_s = params.cost.t_encode(bg_mpx + roi_mpx);
        entry.frame_id = frame.id;
        result.entries.push_back(std::move(entry));
      }
    }
  }
  return result;
}

namespace {

nlohmann::ordered_json embedding_to_json(const DistributionEmbedding& e) {
  return {{"g", e.grid_g},
          {"base", e.base},
          {"shifted", e.shifted},
          {"empty", e.empty_flag}};
}

DistributionEmbedding embedding_from_json(const nlohmann::json& j) {
  DistributionEmbedding e;
  e.grid_g = j.at("g").get<int>();
  e.base = j.at("base").get<std::vector<float>>();
  e.shifted = j.at("shifted").get<std::vector<float>>();
  e.empty_flag = j.value("empty", false);
  return e;
}

}  // namespace

void save_config_set(const ConfigSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_config_set: cannot open " + path);
  for (const auto& e : set) {
    nlohmann::ordered_json j{{"id", e.id},
                             {"embedding", embedding_to_json(e.embedding)},
                             {"k", e.k},
                             {"q_roi", e.q_roi},
                             {"q_bg", e.q_bg},
                             {"accuracy", e.accuracy},
                             {"payload_size", e.payload_size},
                             {"t_cluster_s", e.t_cluster_s},
                             {"t_encode_s", e.t_encode_s},
                             {"frame_id", e.frame_id}};
    out << j.dump() << "\n";
  }
}

ConfigSet load_config_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config_set: cannot open " + path);
  ConfigSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& err) {
      throw std::runtime_error("load_config_set: " + path + ":" +
                               std::to_string(line_no) + ": " + err.what());
    }
    ConfigEntry e;
    e.id = j.at("id").get<std::int64_t>();
    e.embedding = embedding_from_json(j.at("embedding"));
    e.k = j.at("k").get<int>();
    e.q_roi = j.at("q_roi").get<int>();
    e.q_bg = j.at("q_bg").get<int>();
    e.accuracy = j.at("accuracy").get<double>();
    e.payload_size = j.at("payload_size").get<std::uint64_t>();
    e.t_cluster_s = j.at("t_cluster_s").get<double>();
    e.t_encode_s = j.at("t_encode_s").get<double>();
    e.frame_id = j.at("frame_id").get<std::int64_t>();
    set.push_back(std::move(e));
  }
  return set;
}

}  // namespace cloudeye
