#include "cloudeye/roi_encode.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "cloudeye/jpeg_codec.hpp"
#include "cloudeye/kernels.hpp"

namespace cloudeye {

namespace {

struct WeightedPoint {
  double x, y, w;
};

double cluster_wcss(const std::vector<WeightedPoint>& pts,
                    const std::vector<int>& members) {
  double wsum = 0.0, cx = 0.0, cy = 0.0;
  for (int i : members) {
    wsum += pts[i].w;
    cx += pts[i].w * pts[i].x;
    cy += pts[i].w * pts[i].y;
  }
  if (wsum <= 0.0) return 0.0;
  cx /= wsum;
  cy /= wsum;
  double wcss = 0.0;
  for (int i : members) {
    const double dx = pts[i].x - cx, dy = pts[i].y - cy;
    wcss += pts[i].w * (dx * dx + dy * dy);
  }
  return wcss;
}

// exact optimal bipartition by enumeration, feasible for small clusters
std::pair<std::vector<int>, std::vector<int>> bisect_exact(
    const std::vector<WeightedPoint>& pts, const std::vector<int>& members) {
  const int n = static_cast<int>(members.size());
  double best = std::numeric_limits<double>::infinity();
  unsigned best_mask = 1;
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    std::vector<int> left, right;
    for (int i = 0; i < n; ++i) {
      ((mask >> i) & 1 ? left : right).push_back(members[i]);
    }
    const double w = cluster_wcss(pts, left) + cluster_wcss(pts, right);
    if (w < best) {
      best = w;
      best_mask = mask;
    }
  }
  std::vector<int> left, right;
  for (int i = 0; i < n; ++i) {
    ((best_mask >> i) & 1 ? left : right).push_back(members[i]);
  }
  return {left, right};
}

// weighted 2-means seeded with the farthest-apart pair
std::pair<std::vector<int>, std::vector<int>> bisect_lloyd(
    const std::vector<WeightedPoint>& pts, const std::vector<int>& members) {
  int a = members[0], b = members[0];
  double best = -1.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      const auto& p = pts[members[i]];
      const auto& q = pts[members[j]];
      const double d = (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y);
      if (d > best) {
        best = d;
        a = members[i];
        b = members[j];
      }
    }
  }
  if (best <= 0.0) {
    // all centers coincide; split arbitrarily to honor the requested k
    std::vector<int> left{members[0]};
    std::vector<int> right(members.begin() + 1, members.end());
    return {left, right};
  }

  std::vector<double> flat;
  flat.reserve(members.size() * 2);
  for (int i : members) {
    flat.push_back(pts[i].x);
    flat.push_back(pts[i].y);
  }
  std::vector<double> centroids{pts[a].x, pts[a].y, pts[b].x, pts[b].y};
  std::vector<int> assign, prev;
  for (int iter = 0; iter < 50; ++iter) {
    kernels::assign_nearest(flat, 2, centroids, assign);
    if (assign == prev) break;
    prev = assign;
    double wsum[2] = {0, 0}, sx[2] = {0, 0}, sy[2] = {0, 0};
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto& p = pts[members[i]];
      const int c = assign[i];
      wsum[c] += p.w;
      sx[c] += p.w * p.x;
      sy[c] += p.w * p.y;
    }
    for (int c = 0; c < 2; ++c) {
      if (wsum[c] > 0.0) {
        centroids[c * 2] = sx[c] / wsum[c];
        centroids[c * 2 + 1] = sy[c] / wsum[c];
      }
    }
  }

  std::vector<int> left, right;
  for (std::size_t i = 0; i < members.size(); ++i) {
    (assign[i] == 0 ? left : right).push_back(members[i]);
  }
  if (left.empty() || right.empty()) {
    std::vector<int> l{members[0]};
    std::vector<int> r(members.begin() + 1, members.end());
    return {l, r};
  }
  return {left, right};
}

// Exact split for small clusters (the common per-frame case), farthest-pair
// Lloyd beyond the enumeration budget.
std::pair<std::vector<int>, std::vector<int>> bisect(
    const std::vector<WeightedPoint>& pts, const std::vector<int>& members) {
  if (members.size() <= 16) return bisect_exact(pts, members);
  return bisect_lloyd(pts, members);
}

}  // namespace

std::vector<std::vector<int>> weighted_bikmeans(
    const std::vector<BoundingBox>& boxes, int k) {
  if (k < 1 || k > static_cast<int>(boxes.size())) {
    throw std::invalid_argument(
        "weighted_bikmeans: k must be in [1, boxes.size()]; cap k at the box count");
  }
  std::vector<WeightedPoint> pts;
  pts.reserve(boxes.size());
  for (const auto& b : boxes) {
    const auto c = b.center();
    pts.push_back({c.x, c.y, std::max(b.area(), 1e-9)});
  }

  std::vector<std::vector<int>> clusters;
  std::vector<int> all(boxes.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  clusters.push_back(std::move(all));

  while (static_cast<int>(clusters.size()) < k) {
    int pick = -1;
    double pick_wcss = -1.0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      if (clusters[i].size() < 2) continue;
      const double w = cluster_wcss(pts, clusters[i]);
      if (w > pick_wcss ||
          (w == pick_wcss && pick >= 0 &&
           clusters[i].size() > clusters[pick].size())) {
        pick_wcss = w;
        pick = static_cast<int>(i);
      }
    }
    auto [left, right] = bisect(pts, clusters[pick]);
    clusters[pick] = std::move(left);
    clusters.push_back(std::move(right));
  }
  for (auto& c : clusters) std::sort(c.begin(), c.end());
  return clusters;
}

double weighted_wcss(const std::vector<BoundingBox>& boxes,
                     const std::vector<std::vector<int>>& clusters) {
  std::vector<WeightedPoint> pts;
  pts.reserve(boxes.size());
  for (const auto& b : boxes) {
    const auto c = b.center();
    pts.push_back({c.x, c.y, std::max(b.area(), 1e-9)});
  }
  double total = 0.0;
  for (const auto& c : clusters) total += cluster_wcss(pts, c);
  return total;
}

RoiPlan plan_rois(const std::vector<BoundingBox>& boxes, int k, double padding,
                  int frame_w, int frame_h, int q_roi, int q_bg) {
  if (q_roi < q_bg) {
    throw std::invalid_argument("plan_rois: q_roi must be >= q_bg");
  }
  RoiPlan plan;
  plan.q_roi = q_roi;
  plan.q_bg = q_bg;
  plan.clusters_k = k;
  if (boxes.empty()) return plan;

  const auto clusters = weighted_bikmeans(boxes, k);
  for (const auto& members : clusters) {
    BoundingBox hull = boxes[members[0]];
    for (std::size_t i = 1; i < members.size(); ++i) {
      hull = union_rect(hull, boxes[members[i]]);
    }
    hull.x_min -= padding;
    hull.y_min -= padding;
    hull.x_max += padding;
    hull.y_max += padding;
    plan.rois.push_back(hull.clamped(frame_w, frame_h));
  }

  // merge overlapping ROIs until disjoint
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < plan.rois.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < plan.rois.size() && !merged; ++j) {
        if (overlaps(plan.rois[i], plan.rois[j])) {
          plan.rois[i] = union_rect(plan.rois[i], plan.rois[j]);
          plan.rois.erase(plan.rois.begin() + j);
          merged = true;
        }
      }
    }
  }
  std::sort(plan.rois.begin(), plan.rois.end(),
            [](const BoundingBox& a, const BoundingBox& b) {
              if (a.y_min != b.y_min) return a.y_min < b.y_min;
              return a.x_min < b.x_min;
            });
  return plan;
}

namespace {

struct PixelRect {
  int x, y, w, h;
};

PixelRect to_pixel_rect(const BoundingBox& b, int frame_w, int frame_h) {
  int x0 = std::clamp(static_cast<int>(std::floor(b.x_min)), 0, frame_w - 1);
  int y0 = std::clamp(static_cast<int>(std::floor(b.y_min)), 0, frame_h - 1);
  int x1 = std::clamp(static_cast<int>(std::ceil(b.x_max)), x0 + 1, frame_w);
  int y1 = std::clamp(static_cast<int>(std::ceil(b.y_max)), y0 + 1, frame_h);
  return {x0, y0, x1 - x0, y1 - y0};
}

std::vector<std::uint8_t> crop_rgb(const Frame& frame, const PixelRect& r) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(r.w) * r.h * 3);
  for (int row = 0; row < r.h; ++row) {
    std::memcpy(out.data() + static_cast<std::size_t>(row) * r.w * 3,
                frame.px(r.x, r.y + row), static_cast<std::size_t>(r.w) * 3);
  }
  return out;
}

}  // namespace

EncodedFrame encode_frame(const Frame& frame, const RoiPlan& plan) {
  if (!frame.valid()) throw CodecError("encode", "invalid frame");
  EncodedFrame enc;
  enc.frame_id = frame.id;
  enc.width = frame.width;
  enc.height = frame.height;
  enc.clusters_k = static_cast<std::uint8_t>(plan.clusters_k);
  enc.q_roi = static_cast<std::uint8_t>(plan.q_roi);
  enc.q_bg = static_cast<std::uint8_t>(plan.q_bg);

  enc.background =
      jpeg_encode_rgb(frame.pixels.data(), frame.width, frame.height, plan.q_bg);
  for (const auto& roi : plan.rois) {
    const PixelRect r = to_pixel_rect(roi, frame.width, frame.height);
    const auto crop = crop_rgb(frame, r);
    EncodedRegion region;
    region.x = r.x;
    region.y = r.y;
    region.w = r.w;
    region.h = r.h;
    region.payload = jpeg_encode_rgb(crop.data(), r.w, r.h, plan.q_roi);
    enc.regions.push_back(std::move(region));
  }
  return enc;
}

Frame decode_frame(const EncodedFrame& enc) {
  DecodedImage bg = jpeg_decode_rgb(enc.background);
  if (bg.width != enc.width || bg.height != enc.height) {
    throw CodecError("background", "decoded dimensions disagree with header");
  }
  Frame frame;
  frame.id = enc.frame_id;
  frame.width = enc.width;
  frame.height = enc.height;
  frame.pixels = std::move(bg.rgb);

  for (std::size_t i = 0; i < enc.regions.size(); ++i) {
    const auto& region = enc.regions[i];
    DecodedImage img = jpeg_decode_rgb(region.payload);
    if (img.width != region.w || img.height != region.h) {
      throw CodecError("region " + std::to_string(i),
                       "decoded dimensions disagree with rect");
    }
    for (int row = 0; row < region.h; ++row) {
      std::memcpy(frame.px(region.x, region.y + row),
                  img.rgb.data() + static_cast<std::size_t>(row) * region.w * 3,
                  static_cast<std::size_t>(region.w) * 3);
    }
  }
  return frame;
}

namespace {

constexpr char kMagic[4] = {'C', 'E', 'Y', 'E'};
constexpr std::uint8_t kVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    buf_.push_back(v & 0xff);
    buf_.push_back((v >> 8) & 0xff);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back((v >> (8 * i)) & 0xff);
  }
  void bytes(std::span<const std::uint8_t> b) {
    buf_.insert(buf_.end(), b.begin(), b.end());
  }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint8_t u8(const char* section) {
    need(1, section);
    return b_[pos_++];
  }
  std::uint16_t u16(const char* section) {
    need(2, section);
    const std::uint16_t v = b_[pos_] | (std::uint16_t(b_[pos_ + 1]) << 8);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* section) {
    need(4, section);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::vector<std::uint8_t> bytes(std::size_t n, const char* section) {
    need(n, section);
    std::vector<std::uint8_t> out(b_.begin() + pos_, b_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n, const char* section) {
    if (b_.size() - pos_ < n) throw CodecError(section, "truncated");
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t EncodedFrame::total_size() const {
  std::size_t n = 4 + 1 + 4 + 2 + 2 + 1 + 1 + 1 + 2;  // fixed header
  for (const auto& r : regions) n += 8 + 4 + r.payload.size();
  n += 4 + background.size();
  return n;
}

std::vector<std::uint8_t> serialize(const EncodedFrame& enc) {
  Writer w;
  w.bytes(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(kMagic), 4));
  w.u8(kVersion);
  w.u32(static_cast<std::uint32_t>(enc.frame_id));
  w.u16(static_cast<std::uint16_t>(enc.width));
  w.u16(static_cast<std::uint16_t>(enc.height));
  w.u8(enc.clusters_k);
  w.u8(enc.q_roi);
  w.u8(enc.q_bg);
  w.u16(static_cast<std::uint16_t>(enc.regions.size()));
  for (const auto& r : enc.regions) {
    w.u16(static_cast<std::uint16_t>(r.x));
    w.u16(static_cast<std::uint16_t>(r.y));
    w.u16(static_cast<std::uint16_t>(r.w));
    w.u16(static_cast<std::uint16_t>(r.h));
    w.u32(static_cast<std::uint32_t>(r.payload.size()));
    w.bytes(r.payload);
  }
  w.u32(static_cast<std::uint32_t>(enc.background.size()));
  w.bytes(enc.background);
  return w.take();
}

EncodedFrame deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.bytes(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw CodecError("magic", "not a CEYE payload");
  }
  if (r.u8("version") != kVersion) throw CodecError("version", "unsupported");

  EncodedFrame enc;
  enc.frame_id = r.u32("frame_id");
  enc.width = r.u16("width");
  enc.height = r.u16("height");
  if (enc.width < 1 || enc.height < 1) {
    throw CodecError("dimensions", "zero width or height");
  }
  enc.clusters_k = r.u8("clusters");
  enc.q_roi = r.u8("q_roi");
  enc.q_bg = r.u8("q_bg");
  const std::uint16_t roi_count = r.u16("roi_count");
  for (std::uint16_t i = 0; i < roi_count; ++i) {
    const std::string section = "region " + std::to_string(i);
    EncodedRegion region;
    region.x = r.u16(section.c_str());
    region.y = r.u16(section.c_str());
    region.w = r.u16(section.c_str());
    region.h = r.u16(section.c_str());
    if (region.w < 1 || region.h < 1 || region.x + region.w > enc.width ||
        region.y + region.h > enc.height) {
      throw CodecError(section, "rect outside frame");
    }
    const std::uint32_t len = r.u32(section.c_str());
    if (len == 0) throw CodecError(section, "empty payload");
    region.payload = r.bytes(len, section.c_str());
    enc.regions.push_back(std::move(region));
  }
  const std::uint32_t bg_len = r.u32("background");
  if (bg_len == 0) throw CodecError("background", "empty payload");
  enc.background = r.bytes(bg_len, "background");
  if (r.remaining() != 0) throw CodecError("trailer", "trailing bytes");
  return enc;
}

}  // namespace cloudeye
