#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "cloudeye/feature_map.hpp"
#include "cloudeye/frame.hpp"
#include "cloudeye/geometry.hpp"

namespace cloudeye {

// Per-frame ground truth lookup backing the scripted detectors.
class AnnotationTable {
 public:
  AnnotationTable() = default;
  explicit AnnotationTable(std::vector<GroundTruth> gts);

  void put(GroundTruth gt);
  const GroundTruth* find(std::int64_t frame_id) const;
  std::size_t size() const { return by_frame_.size(); }

 private:
  std::unordered_map<std::int64_t, GroundTruth> by_frame_;
};

struct ScriptedModelConfig {
  double miss_rate_small = 0.0;
  double miss_rate_large = 0.0;
  double small_area_threshold = 32.0 * 32.0;  // px^2
  double box_jitter_sigma = 0.0;              // px
  double confidence_noise_sigma = 0.0;
  double latency_s = 0.0;
  std::uint64_t rng_seed = 1;
};

// Synthetic detector: drops each ground-truth box with the size-bucket miss
// rate, jitters survivors, assigns confidence 1 - |noise|. Pure function of
// (config, gt, frame id).
std::vector<Detection> scripted_detect(const ScriptedModelConfig& cfg,
                                       const GroundTruth& gt, const Frame& frame,
                                       Source source);

class ModelInterface {
 public:
  virtual ~ModelInterface() = default;
  virtual FeatureMap extract(const Frame& frame) const = 0;
  // Output count never exceeds the proposal count.
  virtual std::vector<Detection> regress(const std::vector<BoundingBox>& proposals,
                                         const FeatureMap& features,
                                         const Frame& frame) const = 0;
  virtual std::vector<Detection> full_infer(const Frame& frame) const = 0;
};

// Edge detector stand-in. regress() restricts the scripted detections to the
// ones a proposal actually covers, one detection per proposal at most.
class ScriptedEdgeModel : public ModelInterface {
 public:
  ScriptedEdgeModel(ScriptedModelConfig cfg, ExtractorConfig extractor,
                    const AnnotationTable* annotations,
                    double proposal_iou_gate = 0.2);

  FeatureMap extract(const Frame& frame) const override;
  std::vector<Detection> regress(const std::vector<BoundingBox>& proposals,
                                 const FeatureMap& features,
                                 const Frame& frame) const override;
  std::vector<Detection> full_infer(const Frame& frame) const override;

  const ScriptedModelConfig& config() const { return cfg_; }

 private:
  ScriptedModelConfig cfg_;
  ExtractorConfig extractor_;
  const AnnotationTable* annotations_;
  double proposal_iou_gate_;
};

}  // namespace cloudeye
