#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cloudeye/frame.hpp"
#include "cloudeye/geometry.hpp"

namespace cloudeye {

struct RoiPlan {
  int clusters_k = 1;
  std::vector<BoundingBox> rois;  // pairwise non-overlapping after merging
  int q_roi = 90;
  int q_bg = 20;
};

struct EncodedRegion {
  int x = 0, y = 0, w = 0, h = 0;  // integer pixel rect
  std::vector<std::uint8_t> payload;
};

struct EncodedFrame {
  std::int64_t frame_id = 0;
  int width = 0;
  int height = 0;
  std::uint8_t clusters_k = 1;
  std::uint8_t q_roi = 90;
  std::uint8_t q_bg = 20;
  std::vector<EncodedRegion> regions;
  std::vector<std::uint8_t> background;

  std::size_t total_size() const;  // serialized byte count
};

// Bisecting k-means over box centers weighted by box area. Deterministic:
// 2-means seeds are the farthest-apart pair of the cluster being split.
// Throws std::invalid_argument when k is out of [1, boxes.size()].
std::vector<std::vector<int>> weighted_bikmeans(
    const std::vector<BoundingBox>& boxes, int k);

// weighted within-cluster sum of squared center distances
double weighted_wcss(const std::vector<BoundingBox>& boxes,
                     const std::vector<std::vector<int>>& clusters);

// Cluster hulls expanded by padding, clamped, then overlapping ROIs merged to
// a fixpoint so every box lands in exactly one ROI.
RoiPlan plan_rois(const std::vector<BoundingBox>& boxes, int k, double padding,
                  int frame_w, int frame_h, int q_roi, int q_bg);

// Background encoded whole at q_bg, each ROI crop at q_roi.
EncodedFrame encode_frame(const Frame& frame, const RoiPlan& plan);

// Background decoded first, ROI crops composited over it.
Frame decode_frame(const EncodedFrame& enc);

// Wire format, little-endian: "CEYE" u8 version, u32 frame_id, u16 w/h,
// u8 K/q_roi/q_bg, u16 roi_count, per-ROI {u16 x,y,w,h; u32 len; bytes},
// u32 bg_len + bytes. deserialize consumes the whole span or throws.
std::vector<std::uint8_t> serialize(const EncodedFrame& enc);
EncodedFrame deserialize(std::span<const std::uint8_t> bytes);

}  // namespace cloudeye
