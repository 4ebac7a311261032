#include "cloudeye/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace cloudeye {

namespace {

struct RankedDet {
  double confidence;
  std::size_t frame;
  const Detection* det;
};

double average_precision(std::vector<RankedDet>& dets,
                         const std::vector<GroundTruth>& gts, int class_id,
                         double iou_thresh, int n_gt) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const RankedDet& a, const RankedDet& b) {
                     return a.confidence > b.confidence;
                   });
  // matched flags per (frame, gt index)
  std::vector<std::vector<bool>> taken(gts.size());
  for (std::size_t f = 0; f < gts.size(); ++f) {
    taken[f].assign(gts[f].boxes.size(), false);
  }

  std::vector<double> precision, recall;
  int tp = 0, fp = 0;
  for (const auto& rd : dets) {
    const auto& frame_gt = gts[rd.frame];
    double best_iou = 0.0;
    int best = -1;
    for (std::size_t g = 0; g < frame_gt.boxes.size(); ++g) {
      if (frame_gt.boxes[g].class_id != class_id || taken[rd.frame][g]) continue;
      const double v = iou(rd.det->box, frame_gt.boxes[g].box);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0 && best_iou >= iou_thresh) {
      taken[rd.frame][best] = true;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(double(tp) / double(tp + fp));
    recall.push_back(double(tp) / double(n_gt));
  }

  // all-point interpolation: integrate the precision envelope over recall
  double ap = 0.0;
  double env = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = precision.size(); i-- > 0;) {
    env = std::max(env, precision[i]);
    precision[i] = env;
  }
  for (std::size_t i = 0; i < precision.size(); ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

}  // namespace

MapResult evaluate_map(const std::vector<std::vector<Detection>>& dets_per_frame,
                       const std::vector<GroundTruth>& gts, double iou_thresh) {
  if (iou_thresh <= 0.0 || iou_thresh >= 1.0) {
    throw std::invalid_argument("evaluate_map: iou_thresh must be in (0,1)");
  }
  if (dets_per_frame.size() != gts.size()) {
    throw std::invalid_argument("evaluate_map: frame count mismatch");
  }

  std::map<int, int> gt_counts;  // ordered so per-class iteration is stable
  for (const auto& gt : gts) {
    for (const auto& b : gt.boxes) ++gt_counts[b.class_id];
  }
  if (gt_counts.empty()) return {0.0, true};

  double sum_ap = 0.0;
  for (const auto& [class_id, n_gt] : gt_counts) {
    std::vector<RankedDet> ranked;
    for (std::size_t f = 0; f < dets_per_frame.size(); ++f) {
      for (const auto& d : dets_per_frame[f]) {
        if (d.class_id == class_id) ranked.push_back({d.confidence, f, &d});
      }
    }
    sum_ap += average_precision(ranked, gts, class_id, iou_thresh, n_gt);
  }
  return {sum_ap / static_cast<double>(gt_counts.size()), false};
}

}  // namespace cloudeye
