#include "cloudeye/scripted_model.hpp"

#include <algorithm>
#include <cmath>

#include "cloudeye/rng.hpp"

namespace cloudeye {

AnnotationTable::AnnotationTable(std::vector<GroundTruth> gts) {
  for (auto& gt : gts) put(std::move(gt));
}

void AnnotationTable::put(GroundTruth gt) { by_frame_[gt.frame_id] = std::move(gt); }

const GroundTruth* AnnotationTable::find(std::int64_t frame_id) const {
  auto it = by_frame_.find(frame_id);
  return it == by_frame_.end() ? nullptr : &it->second;
}

std::vector<Detection> scripted_detect(const ScriptedModelConfig& cfg,
                                       const GroundTruth& gt, const Frame& frame,
                                       Source source) {
  std::vector<Detection> out;
  out.reserve(gt.boxes.size());
  const std::uint64_t frame_seed =
      derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(frame.id));
  for (std::size_t i = 0; i < gt.boxes.size(); ++i) {
    const auto& g = gt.boxes[i];
    // one sub-stream per box: a drop never shifts the draws of later boxes
    Rng rng(derive_seed(frame_seed, i));
    const bool small = g.box.area() < cfg.small_area_threshold;
    const double miss = small ? cfg.miss_rate_small : cfg.miss_rate_large;
    if (rng.uniform01() < miss) continue;

    BoundingBox b = g.box;
    if (cfg.box_jitter_sigma > 0.0) {
      b.x_min += rng.normal() * cfg.box_jitter_sigma;
      b.y_min += rng.normal() * cfg.box_jitter_sigma;
      b.x_max += rng.normal() * cfg.box_jitter_sigma;
      b.y_max += rng.normal() * cfg.box_jitter_sigma;
      if (b.x_min > b.x_max) std::swap(b.x_min, b.x_max);
      if (b.y_min > b.y_max) std::swap(b.y_min, b.y_max);
    }
    b = b.clamped(frame.width, frame.height);
    if (!b.valid()) continue;

    double conf = 1.0;
    if (cfg.confidence_noise_sigma > 0.0) {
      conf = 1.0 - std::abs(rng.normal() * cfg.confidence_noise_sigma);
      conf = std::clamp(conf, 0.0, 1.0);
    }
    out.push_back({b, g.class_id, conf, source});
  }
  return out;
}

ScriptedEdgeModel::ScriptedEdgeModel(ScriptedModelConfig cfg,
                                     ExtractorConfig extractor,
                                     const AnnotationTable* annotations,
                                     double proposal_iou_gate)
    : cfg_(cfg),
      extractor_(std::move(extractor)),
      annotations_(annotations),
      proposal_iou_gate_(proposal_iou_gate) {}

FeatureMap ScriptedEdgeModel::extract(const Frame& frame) const {
  return extract_features(frame, extractor_);
}

std::vector<Detection> ScriptedEdgeModel::full_infer(const Frame& frame) const {
  const GroundTruth* gt = annotations_ ? annotations_->find(frame.id) : nullptr;
  if (!gt) return {};
  return scripted_detect(cfg_, *gt, frame, Source::Edge);
}

std::vector<Detection> ScriptedEdgeModel::regress(
    const std::vector<BoundingBox>& proposals, const FeatureMap& features,
    const Frame& frame) const {
  (void)features;
  std::vector<Detection> dets = full_infer(frame);
  if (proposals.empty() || dets.empty()) return {};

  // greedy one-to-one assignment of detections to proposals; a proposal sees
  // a target when their IoU clears the gate or the proposal covers most of it
  struct Pair {
    double score;
    std::size_t p, d;
  };
  std::vector<Pair> pairs;
  for (std::size_t p = 0; p < proposals.size(); ++p) {
    for (std::size_t d = 0; d < dets.size(); ++d) {
      const double v = iou(proposals[p], dets[d].box);
      const double ix = std::min(proposals[p].x_max, dets[d].box.x_max) -
                        std::max(proposals[p].x_min, dets[d].box.x_min);
      const double iy = std::min(proposals[p].y_max, dets[d].box.y_max) -
                        std::max(proposals[p].y_min, dets[d].box.y_min);
      const double inter = ix > 0 && iy > 0 ? ix * iy : 0.0;
      const double coverage = inter / dets[d].box.area();
      if (v >= proposal_iou_gate_ || coverage >= 0.7) {
        pairs.push_back({std::max(v, coverage), p, d});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.p != b.p) return a.p < b.p;
    return a.d < b.d;
  });
  std::vector<bool> p_used(proposals.size(), false), d_used(dets.size(), false);
  std::vector<Detection> out;
  for (const auto& pr : pairs) {
    if (p_used[pr.p] || d_used[pr.d]) continue;
    p_used[pr.p] = true;
    d_used[pr.d] = true;
    out.push_back(dets[pr.d]);
  }
  return out;
}

}  // namespace cloudeye
