#include "cloudeye/mining.hpp"

#include <algorithm>
#include <cmath>

#include "cloudeye/kernels.hpp"

namespace cloudeye {

namespace {

using kernels::CellRect;

// cell containing a pixel point on a layer, clamped to the grid
int cell_of(double px, int stride, int grid) {
  const int c = static_cast<int>(std::floor(px / stride));
  return std::clamp(c, 0, grid - 1);
}

CellRect region_cells(const BoundingBox& box, const FeatureLayer& layer) {
  CellRect r;
  r.u0 = static_cast<int>(std::ceil(box.x_min / layer.stride));
  r.u1 = static_cast<int>(std::floor(box.x_max / layer.stride));
  r.v0 = static_cast<int>(std::ceil(box.y_min / layer.stride));
  r.v1 = static_cast<int>(std::floor(box.y_max / layer.stride));
  r.u0 = std::clamp(r.u0, 0, layer.grid_w - 1);
  r.u1 = std::clamp(r.u1, 0, layer.grid_w - 1);
  r.v0 = std::clamp(r.v0, 0, layer.grid_h - 1);
  r.v1 = std::clamp(r.v1, 0, layer.grid_h - 1);
  return r;
}

double descriptor_distance(const FeatureLayer& layer, int u, int v,
                           const std::vector<float>& ref,
                           const std::vector<float>& inv_std) {
  const float* f = layer.at(u, v);
  double acc = 0.0;
  for (int c = 0; c < layer.channels; ++c) {
    const double d = (double(f[c]) - double(ref[c])) * double(inv_std[c]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

struct Cell {
  int u = 0, v = 0;
};

// argmin over a cost map; ties resolve row-major to the first cell
Cell argmin_cell(const std::vector<float>& costs, const CellRect& rect) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < costs.size(); ++i) {
    if (costs[i] < costs[best]) best = i;
  }
  const int w = rect.width();
  return {rect.u0 + static_cast<int>(best % w), rect.v0 + static_cast<int>(best / w)};
}

double clamp_scale(double s) {
  return std::clamp(s, MatchTransform::kMinScale, MatchTransform::kMaxScale);
}

}  // namespace

int select_layer(const BoundingBox& box, const FeatureMap& fmap) {
  const double target = std::sqrt(std::max(box.area(), 1.0)) / 4.0;
  int best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fmap.layers.size(); ++i) {
    const double gap = std::abs(fmap.layers[i].stride - target);
    if (gap < best_gap) {  // strict: ties keep the earlier (smaller) stride
      best_gap = gap;
      best = static_cast<int>(i);
    }
  }
  return best;
}

SearchRegion search_region(const BoundingBox& o_pre, const BoundingBox& o_ref,
                           double l_padding, int frame_w, int frame_h) {
  BoundingBox hull = union_rect(o_pre, o_ref);
  hull.x_min -= l_padding;
  hull.y_min -= l_padding;
  hull.x_max += l_padding;
  hull.y_max += l_padding;
  SearchRegion region;
  region.box = hull.clamped(frame_w, frame_h);
  return region;
}

SamplePoints sample_descriptors(const Detection& det, const FeatureMap& fmap) {
  SamplePoints sp;
  sp.box = det.box;
  sp.class_id = det.class_id;
  sp.layer_index = select_layer(det.box, fmap);
  const FeatureLayer& layer = fmap.layers[sp.layer_index];

  const auto c = det.box.center();
  const double qw = det.box.width() / 4.0;
  const double qh = det.box.height() / 4.0;
  sp.points[0] = c;
  sp.points[1] = {c.x - qw, c.y - qh};  // TL
  sp.points[2] = {c.x + qw, c.y - qh};  // TR
  sp.points[3] = {c.x - qw, c.y + qh};  // BL
  sp.points[4] = {c.x + qw, c.y + qh};  // BR

  sp.degenerate = det.box.width() < 2.0 * layer.stride ||
                  det.box.height() < 2.0 * layer.stride;
  if (sp.degenerate) {
    for (int i = 1; i < 5; ++i) sp.points[i] = sp.points[0];
  }

  for (int i = 0; i < 5; ++i) {
    const int u = cell_of(sp.points[i].x, layer.stride, layer.grid_w);
    const int v = cell_of(sp.points[i].y, layer.stride, layer.grid_h);
    const float* f = layer.at(u, v);
    sp.descriptors[i].assign(f, f + layer.channels);
  }
  return sp;
}

std::vector<std::vector<float>> estimate_inv_std(const FeatureMap& fmap) {
  std::vector<std::vector<float>> out;
  out.reserve(fmap.layers.size());
  for (const auto& layer : fmap.layers) {
    const std::size_t cells = static_cast<std::size_t>(layer.grid_w) * layer.grid_h;
    std::vector<double> mean(layer.channels, 0.0), var(layer.channels, 0.0);
    for (std::size_t i = 0; i < cells; ++i) {
      const float* f = layer.data.data() + i * layer.channels;
      for (int c = 0; c < layer.channels; ++c) mean[c] += f[c];
    }
    for (auto& m : mean) m /= static_cast<double>(cells);
    for (std::size_t i = 0; i < cells; ++i) {
      const float* f = layer.data.data() + i * layer.channels;
      for (int c = 0; c < layer.channels; ++c) {
        const double d = f[c] - mean[c];
        var[c] += d * d;
      }
    }
    std::vector<float> inv(layer.channels);
    for (int c = 0; c < layer.channels; ++c) {
      const double v = std::max(var[c] / static_cast<double>(cells), 1e-6);
      inv[c] = static_cast<float>(1.0 / std::sqrt(v));
    }
    out.push_back(std::move(inv));
  }
  return out;
}

namespace {

double mining_confidence(double group_loss, double box_area,
                         const MiningParams& p) {
  const bool small = box_area < p.small_area_threshold;
  const double scale = small ? p.conf_scale_small : p.conf_scale_large;
  const double tau = small ? p.conf_tau_small : p.conf_tau_large;
  const double mean_loss = group_loss / 5.0;
  const double value = scale / (std::exp(mean_loss) - tau);
  return std::min(value, 1.0);
}

}  // namespace

MatchResult match_target(const SamplePoints& ref, const FeatureMap& cur,
                         const std::vector<float>& inv_std,
                         const SearchRegion& region, const MiningParams& params) {
  MatchResult result;
  const FeatureLayer& layer = cur.layers[ref.layer_index];
  if (!region.box.valid()) {
    result.failure = MatchFailure::Degenerate;
    return result;
  }
  const CellRect cells = region_cells(region.box, layer);
  if (cells.count() <= 0) {
    result.failure = MatchFailure::Degenerate;
    return result;
  }

  // per-point additive penalty over the full grid, accumulated across rounds
  std::array<std::vector<float>, 5> penalty;
  const std::size_t grid =
      static_cast<std::size_t>(layer.grid_w) * layer.grid_h;
  for (auto& p : penalty) p.assign(grid, 0.0f);

  std::vector<float> costs;
  std::array<Cell, 5> best{};
  double group_loss = std::numeric_limits<double>::infinity();
  bool accepted = false;
  int rounds = 0;

  for (int round = 0; round < params.depth; ++round) {
    rounds = round + 1;
    kernels::descriptor_cost_map(layer, cells, ref.descriptors[0], inv_std,
                                 &penalty[0], costs);
    result.cells_searched += cells.count();
    best[0] = argmin_cell(costs, cells);

    // quadrants induced by the p0 match, boundary row/column shared
    const CellRect quads[4] = {
        {cells.u0, cells.v0, best[0].u, best[0].v},  // TL
        {best[0].u, cells.v0, cells.u1, best[0].v},  // TR
        {cells.u0, best[0].v, best[0].u, cells.v1},  // BL
        {best[0].u, best[0].v, cells.u1, cells.v1},  // BR
    };
    for (int i = 1; i < 5; ++i) {
      kernels::descriptor_cost_map(layer, quads[i - 1], ref.descriptors[i],
                                   inv_std, &penalty[i], costs);
      result.cells_searched += quads[i - 1].count();
      best[i] = argmin_cell(costs, quads[i - 1]);
    }

    group_loss = 0.0;
    for (int i = 0; i < 5; ++i) {
      group_loss +=
          descriptor_distance(layer, best[i].u, best[i].v, ref.descriptors[i], inv_std);
    }
    if (group_loss < params.epsilon) {
      accepted = true;
      break;
    }
    if (round < params.depth - 1) {
      // penalize around the failed matches, inversely proportional to distance
      for (int i = 0; i < 5; ++i) {
        for (int v = cells.v0; v <= cells.v1; ++v) {
          for (int u = cells.u0; u <= cells.u1; ++u) {
            const double dpx = std::hypot(double(u - best[i].u) * layer.stride,
                                          double(v - best[i].v) * layer.stride);
            penalty[i][static_cast<std::size_t>(v) * layer.grid_w + u] +=
                static_cast<float>(params.penalty_weight / (1.0 + dpx));
          }
        }
      }
    }
  }

  result.rounds = rounds;
  result.group_loss = group_loss;
  if (group_loss > params.occlusion_threshold) {
    result.failure = MatchFailure::Occluded;
    return result;
  }

  const double cx = (best[0].u + 0.5) * layer.stride;
  const double cy = (best[0].v + 0.5) * layer.stride;
  BoundingBox out_box;
  if (accepted && !ref.degenerate) {
    const auto px = [&](const Cell& c) -> Point {
      return {double(c.u) * layer.stride, double(c.v) * layer.stride};
    };
    const auto dist = [&](int a, int b) {
      const Point pa = px(best[a]), pb = px(best[b]);
      return std::hypot(pa.x - pb.x, pa.y - pb.y);
    };
    // TL,TR,BL,BR quadrant centers sit w/2 resp. h/2 apart, so the two sums
    // recover the full extents directly
    const double width = dist(1, 2) + dist(3, 4);
    const double height = dist(1, 3) + dist(2, 4);
    result.transform.s_x = clamp_scale(width / std::max(ref.box.width(), 1e-9));
    result.transform.s_y = clamp_scale(height / std::max(ref.box.height(), 1e-9));
  } else {
    // conservative strategy: relocate the center, keep the reference scale
    result.conservative = true;
    result.transform.s_x = 1.0;
    result.transform.s_y = 1.0;
  }
  const auto ref_center = ref.box.center();
  result.transform.t_x = cx - ref_center.x * result.transform.s_x;
  result.transform.t_y = cy - ref_center.y * result.transform.s_y;
  out_box = BoundingBox::from_center(cx, cy,
                                     ref.box.width() * result.transform.s_x,
                                     ref.box.height() * result.transform.s_y);

  const int frame_w = layer.grid_w * layer.stride;
  const int frame_h = layer.grid_h * layer.stride;
  out_box = out_box.clamped(frame_w, frame_h);
  if (!out_box.valid()) {
    result.failure = MatchFailure::Degenerate;
    return result;
  }

  Detection det;
  det.box = out_box;
  det.class_id = ref.class_id;
  det.source = Source::Mined;
  det.confidence = mining_confidence(group_loss, out_box.area(), params);
  result.confidence = det.confidence;
  result.detection = det;
  return result;
}

ReferenceFrame make_reference(std::int64_t frame_id,
                              std::vector<Detection> detections,
                              FeatureMap features) {
  ReferenceFrame ref;
  ref.frame_id = frame_id;
  ref.detections = std::move(detections);
  ref.features = std::move(features);
  ref.layer_inv_std = estimate_inv_std(ref.features);
  ref.samples.reserve(ref.detections.size());
  for (const auto& det : ref.detections) {
    ref.samples.push_back(sample_descriptors(det, ref.features));
  }
  return ref;
}

MineOutcome mine_frame(const FeatureMap& cur_features,
                       const std::vector<Detection>& edge_dets,
                       const std::vector<std::pair<int, BoundingBox>>& track_predictions,
                       const ReferenceFrame& ref, const MiningParams& params,
                       std::vector<MiningEvent>* trace) {
  MineOutcome outcome;
  outcome.detections = edge_dets;
  if (!ref.valid()) return outcome;

  const int frame_w =
      cur_features.layers.empty() ? 0 : cur_features.layers[0].grid_w *
                                            cur_features.layers[0].stride;
  const int frame_h =
      cur_features.layers.empty() ? 0 : cur_features.layers[0].grid_h *
                                            cur_features.layers[0].stride;

  // link reference targets to track predictions so the search region can use
  // the Kalman prior
  std::vector<BoundingBox> ref_boxes, pred_boxes;
  ref_boxes.reserve(ref.detections.size());
  for (const auto& d : ref.detections) ref_boxes.push_back(d.box);
  pred_boxes.reserve(track_predictions.size());
  for (const auto& [id, b] : track_predictions) pred_boxes.push_back(b);
  std::vector<int> linked(ref.detections.size(), -1);
  for (const auto& [ri, pi] : greedy_iou_match(ref_boxes, pred_boxes,
                                               params.track_link_iou)) {
    linked[ri] = pi;
  }

  for (std::size_t i = 0; i < ref.detections.size(); ++i) {
    const auto& target = ref.detections[i];
    bool covered = false;
    for (const auto& e : edge_dets) {
      if (e.class_id == target.class_id &&
          iou(e.box, target.box) >= params.duplicate_iou) {
        covered = true;
        break;
      }
    }
    if (covered) continue;

    const BoundingBox prior =
        linked[i] >= 0 ? pred_boxes[linked[i]] : target.box;
    SearchRegion region =
        search_region(prior, target.box, params.l_padding, frame_w, frame_h);
    region.source_track_id =
        linked[i] >= 0 ? track_predictions[linked[i]].first : -1;
    region.feature_layer_index = ref.samples[i].layer_index;

    const MatchResult match =
        match_target(ref.samples[i], cur_features,
                     ref.layer_inv_std[ref.samples[i].layer_index], region, params);
    outcome.cells_searched += match.cells_searched;
    if (trace) {
      trace->push_back({cur_features.frame_id, static_cast<int>(i), match.rounds,
                        match.group_loss, match.conservative,
                        match.detection.has_value(), match.confidence});
    }
    if (match.detection) {
      outcome.detections.push_back(*match.detection);
      ++outcome.mined;
    }
  }
  return outcome;
}

void FrameCache::push(Frame frame, FeatureMap features,
                      std::vector<Detection> dets) {
  CachedFrame cf;
  cf.layer_inv_std = estimate_inv_std(features);
  cf.frame = std::move(frame);
  cf.features = std::move(features);
  cf.detections = std::move(dets);
  ring_.push_back(std::move(cf));
  while (ring_.size() > capacity_) ring_.pop_front();
}

const CachedFrame* FrameCache::find(std::int64_t frame_id) const {
  for (const auto& cf : ring_) {
    if (cf.frame.id == frame_id) return &cf;
  }
  return nullptr;
}

const CachedFrame* FrameCache::newest() const {
  return ring_.empty() ? nullptr : &ring_.back();
}

namespace {

int recompute_staleness(const std::vector<Detection>& dets, double mean_speed,
                        int fallback) {
  if (dets.empty()) return fallback;
  double diag = 0.0;
  for (const auto& d : dets) diag += std::hypot(d.box.width(), d.box.height());
  diag /= static_cast<double>(dets.size());
  const double speed = std::max(mean_speed, 0.25);  // px/frame floor
  return std::clamp(static_cast<int>(diag / speed), 1, 120);
}

}  // namespace

RefreshResult refresh_reference(const FrameCache& cache,
                                std::int64_t cloud_frame_id,
                                const std::vector<Detection>& cloud_dets,
                                const MiningParams& params,
                                double mean_track_speed) {
  RefreshResult result;
  result.new_staleness_threshold = recompute_staleness(
      cloud_dets, mean_track_speed, params.reference_staleness_threshold);

  const CachedFrame* origin = cache.find(cloud_frame_id);
  const CachedFrame* newest = cache.newest();
  if (!origin || !newest) {
    result.evicted = true;
    return result;
  }

  if (newest->frame.id - cloud_frame_id <= params.reference_staleness_threshold) {
    result.reference =
        make_reference(cloud_frame_id, cloud_dets, origin->features);
    return result;
  }

  // stale: chain the cloud boxes forward hop by hop through the cache
  std::vector<Detection> boxes = cloud_dets;
  const CachedFrame* prev = origin;
  for (std::int64_t fid = cloud_frame_id + 1; fid <= newest->frame.id; ++fid) {
    const CachedFrame* cur = cache.find(fid);
    if (!cur) {
      result.evicted = true;
      return result;
    }
    std::vector<Detection> hopped;
    hopped.reserve(boxes.size());
    for (const auto& det : boxes) {
      SamplePoints sp = sample_descriptors(det, prev->features);
      SearchRegion region =
          search_region(det.box, det.box, params.l_padding, cur->frame.width,
                        cur->frame.height);
      region.feature_layer_index = sp.layer_index;
      const MatchResult match =
          match_target(sp, cur->features, prev->layer_inv_std[sp.layer_index],
                       region, params);
      if (match.detection) {
        Detection d = *match.detection;
        d.class_id = det.class_id;
        d.confidence = det.confidence;
        d.source = det.source;
        hopped.push_back(d);
      }
    }
    boxes = std::move(hopped);
    prev = cur;
    ++result.hops;
    if (boxes.empty()) break;
  }

  result.reference =
      make_reference(newest->frame.id, std::move(boxes), newest->features);
  return result;
}

}  // namespace cloudeye
