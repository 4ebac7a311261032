#pragma once

#include <vector>

#include "cloudeye/geometry.hpp"

namespace cloudeye {

struct MapResult {
  double value = 0.0;
  bool no_gt = false;  // set when the ground truth holds no boxes at all
};

// VOC-style mean average precision: all-point interpolated AP per class at a
// single IoU threshold, averaged over the classes present in the ground truth.
// Detections are matched greedily in descending confidence, each ground-truth
// box at most once. dets_per_frame[i] pairs with gts[i].
MapResult evaluate_map(const std::vector<std::vector<Detection>>& dets_per_frame,
                       const std::vector<GroundTruth>& gts,
                       double iou_thresh = 0.5);

}  // namespace cloudeye
