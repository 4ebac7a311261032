#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "cloudeye/jpeg_codec.hpp"
#include "cloudeye/roi_encode.hpp"
#include "cloudeye/scenario.hpp"
#include "helpers.hpp"

using namespace cloudeye;
using namespace cloudeye::testing;

namespace {

// Exhaustive weighted-2-partition oracle: minimum weighted WCSS over every
// non-trivial bipartition (feasible up to ~12 boxes).
double best_2partition_wcss(const std::vector<BoundingBox>& boxes) {
  const int n = static_cast<int>(boxes.size());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    std::vector<std::vector<int>> clusters(2);
    for (int i = 0; i < n; ++i) clusters[(mask >> i) & 1].push_back(i);
    best = std::min(best, weighted_wcss(boxes, clusters));
  }
  return best;
}

BoundingBox box_at(double cx, double cy, double side) {
  return BoundingBox::from_center(cx, cy, side, side);
}

Frame textured(std::int64_t id, int w, int h, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.frames = 1;
  spec.width = w;
  spec.height = h;
  spec.seed = seed;
  spec.explicit_targets = {{w * 0.1, h * 0.2, 0, 0, w * 0.25, h * 0.3, 0},
                           {w * 0.6, h * 0.55, 0, 0, w * 0.2, h * 0.25, 0}};
  return render_frame(spec, spec.explicit_targets, id);
}

}  // namespace

TEST_CASE("weighted_bikmeans trivial and error cases") {
  std::vector<BoundingBox> boxes{box_at(10, 10, 4), box_at(50, 50, 4),
                                 box_at(90, 90, 4)};
  const auto one = weighted_bikmeans(boxes, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].size() == 3);

  CHECK_THROWS_AS(weighted_bikmeans(boxes, 4), std::invalid_argument);
  CHECK_THROWS_AS(weighted_bikmeans(boxes, 0), std::invalid_argument);
}

TEST_CASE("weighted_bikmeans separates two far groups exactly") {
  std::vector<BoundingBox> boxes;
  for (int i = 0; i < 4; ++i) boxes.push_back(box_at(0.2 * i, 0.3 * i, 1));
  for (int i = 0; i < 4; ++i) boxes.push_back(box_at(100 + 0.2 * i, 100, 1));
  const auto clusters = weighted_bikmeans(boxes, 2);
  REQUIRE(clusters.size() == 2);
  CHECK(weighted_wcss(boxes, clusters) ==
        doctest::Approx(best_2partition_wcss(boxes)));
  for (const auto& c : clusters) {
    const bool left = c[0] < 4;
    for (int i : c) CHECK((i < 4) == left);
  }
}

TEST_CASE("weighted_bikmeans centroid honors the weights") {
  // heavy box dominates its cluster's centroid
  std::vector<BoundingBox> boxes{box_at(0, 0, 1), box_at(50, 50, 10),
                                 box_at(100, 100, 1)};
  const auto clusters = weighted_bikmeans(boxes, 2);
  // the heavy box's cluster centroid must sit within 2 px of (50,50)
  for (const auto& members : clusters) {
    bool has_heavy = false;
    double wsum = 0, cx = 0, cy = 0;
    for (int i : members) {
      has_heavy |= i == 1;
      const double w = boxes[i].area();
      const auto c = boxes[i].center();
      wsum += w;
      cx += w * c.x;
      cy += w * c.y;
    }
    if (has_heavy) {
      CHECK(std::abs(cx / wsum - 50.0) <= 2.0);
      CHECK(std::abs(cy / wsum - 50.0) <= 2.0);
    }
  }
}

TEST_CASE("weighted WCSS never increases along the bisection path") {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = rng.uniform_int(2, 14);
    std::vector<BoundingBox> boxes;
    for (int i = 0; i < n; ++i) {
      boxes.push_back(box_at(rng.uniform(0, 300), rng.uniform(0, 200),
                             rng.uniform(2, 40)));
    }
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= n; ++k) {
      const auto clusters = weighted_bikmeans(boxes, k);
      const double w = weighted_wcss(boxes, clusters);
      CHECK(w <= prev + 1e-9);
      prev = w;
    }
  }
}

TEST_CASE("bikmeans K=2 matches the exhaustive 2-partition oracle") {
  Rng rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = rng.uniform_int(2, 13);
    std::vector<BoundingBox> boxes;
    for (int i = 0; i < n; ++i) {
      boxes.push_back(box_at(rng.uniform(0, 400), rng.uniform(0, 300),
                             rng.uniform(2, 30)));
    }
    const auto clusters = weighted_bikmeans(boxes, 2);
    const double got = weighted_wcss(boxes, clusters);
    const double best = best_2partition_wcss(boxes);
    CHECK(got == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("plan_rois single box, merge, containment") {
  const auto single = plan_rois({{20, 20, 40, 40}}, 1, 8, 200, 200, 90, 20);
  REQUIRE(single.rois.size() == 1);
  CHECK(single.rois[0].x_min == doctest::Approx(12));
  CHECK(single.rois[0].y_max == doctest::Approx(48));

  // overlapping padded ROIs merge into one
  const auto merged =
      plan_rois({{20, 20, 40, 40}, {45, 20, 65, 40}}, 2, 8, 200, 200, 90, 20);
  CHECK(merged.rois.size() == 1);

  // disjoint clusters stay separate and contain their members
  std::vector<BoundingBox> boxes{{10, 10, 30, 30}, {150, 10, 170, 30},
                                 {10, 150, 30, 170}};
  const auto plan = plan_rois(boxes, 3, 4, 200, 200, 90, 20);
  REQUIRE(plan.rois.size() == 3);
  for (const auto& b : boxes) {
    int container = 0;
    for (const auto& roi : plan.rois) {
      if (b.x_min >= roi.x_min && b.x_max <= roi.x_max && b.y_min >= roi.y_min &&
          b.y_max <= roi.y_max) {
        ++container;
      }
    }
    CHECK(container == 1);
  }
  CHECK_THROWS_AS(plan_rois(boxes, 1, 4, 200, 200, 20, 90),
                  std::invalid_argument);
}

TEST_CASE("containment holds for random box sets after merging") {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = rng.uniform_int(1, 9);
    std::vector<BoundingBox> boxes;
    for (int i = 0; i < n; ++i) {
      BoundingBox b = box_at(rng.uniform(20, 400), rng.uniform(20, 280),
                             rng.uniform(8, 60));
      boxes.push_back(b.clamped(440, 320));
    }
    const int k = rng.uniform_int(1, n + 1);
    const auto plan = plan_rois(boxes, k, 16, 440, 320, 90, 20);
    for (std::size_t i = 0; i + 1 < plan.rois.size(); ++i) {
      for (std::size_t j = i + 1; j < plan.rois.size(); ++j) {
        CHECK_FALSE(overlaps(plan.rois[i], plan.rois[j]));
      }
    }
    for (const auto& b : boxes) {
      int container = 0;
      for (const auto& roi : plan.rois) {
        if (b.x_min >= roi.x_min - 1e-9 && b.x_max <= roi.x_max + 1e-9 &&
            b.y_min >= roi.y_min - 1e-9 && b.y_max <= roi.y_max + 1e-9) {
          ++container;
        }
      }
      CHECK(container == 1);
    }
  }
}

TEST_CASE("jpeg round trip is near-lossless at q=100 and strict on garbage") {
  const Frame f = textured(0, 160, 120, 3);
  const auto bytes = jpeg_encode_rgb(f.pixels.data(), f.width, f.height, 100);
  const auto img = jpeg_decode_rgb(bytes);
  REQUIRE(img.width == 160);
  REQUIRE(img.height == 120);
  int max_err = 0;
  for (std::size_t i = 0; i < f.pixels.size(); ++i) {
    max_err = std::max(max_err, std::abs(int(f.pixels[i]) - int(img.rgb[i])));
  }
  CHECK(max_err <= 16);  // measured bound for baseline 4:4:4 on this corpus

  CHECK_THROWS_AS(jpeg_decode_rgb(std::vector<std::uint8_t>{1, 2, 3}), CodecError);
}

TEST_CASE("encode_frame structure: equal-quality degenerate and empty plan") {
  const Frame f = textured(5, 200, 160, 9);
  RoiPlan plan;
  plan.q_roi = plan.q_bg = 60;
  plan.rois = {{40, 40, 120, 120}};
  const EncodedFrame enc = encode_frame(f, plan);

  // background equals the uniform encode byte-for-byte; size identity holds
  const auto uniform = jpeg_encode_rgb(f.pixels.data(), f.width, f.height, 60);
  CHECK(enc.background == uniform);
  std::size_t roi_bytes = 0;
  for (const auto& r : enc.regions) roi_bytes += r.payload.size();
  // 18-byte header, 12 bytes per region rect+len, 4-byte background length
  CHECK(enc.total_size() ==
        18 + 12 * enc.regions.size() + roi_bytes + 4 + uniform.size());
  CHECK(serialize(enc).size() == enc.total_size());

  // decoded ROI content stays close to the single uniform decode
  const Frame dec = decode_frame(enc);
  const auto udec = jpeg_decode_rgb(uniform);
  double mae = 0;
  for (std::size_t i = 0; i < dec.pixels.size(); ++i) {
    mae += std::abs(int(dec.pixels[i]) - int(udec.rgb[i]));
  }
  mae /= static_cast<double>(dec.pixels.size());
  CHECK(mae < 2.0);

  RoiPlan empty;
  empty.q_roi = 90;
  empty.q_bg = 20;
  const EncodedFrame bg_only = encode_frame(f, empty);
  CHECK(bg_only.regions.empty());
  CHECK(decode_frame(bg_only).width == 200);
}

TEST_CASE("roi pixels decode closer to the original than background") {
  const Frame f = textured(1, 320, 240, 11);
  RoiPlan plan;
  plan.q_roi = 95;
  plan.q_bg = 10;
  plan.rois = {{32, 48, 112, 120}};
  const Frame dec = decode_frame(encode_frame(f, plan));

  auto mae_region = [&](int x0, int y0, int x1, int y1) {
    double sum = 0;
    long n = 0;
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        for (int c = 0; c < 3; ++c) {
          sum += std::abs(int(f.px(x, y)[c]) - int(dec.px(x, y)[c]));
          ++n;
        }
      }
    }
    return sum / n;
  };
  const double roi_mae = mae_region(32, 48, 112, 120);
  const double bg_mae = mae_region(150, 150, 320, 240);
  CHECK(roi_mae < bg_mae);
}

TEST_CASE("differentiated encoding beats uniform high quality on size") {
  const Frame f = textured(2, 480, 360, 21);
  RoiPlan plan;
  plan.q_roi = 90;
  plan.q_bg = 20;
  plan.rois = {{48, 72, 168, 180}};  // ~10% of pixels
  const EncodedFrame enc = encode_frame(f, plan);
  const auto uniform = jpeg_encode_rgb(f.pixels.data(), f.width, f.height, 90);
  CHECK(enc.total_size() < uniform.size());
}

TEST_CASE("wire format round trip and header determinism") {
  const Frame f = textured(3, 128, 96, 4);
  RoiPlan plan;
  plan.clusters_k = 2;
  plan.q_roi = 85;
  plan.q_bg = 25;
  plan.rois = {{8, 8, 56, 56}, {64, 40, 120, 88}};
  const EncodedFrame enc = encode_frame(f, plan);
  const auto bytes = serialize(enc);
  const EncodedFrame back = deserialize(bytes);

  CHECK(back.frame_id == enc.frame_id);
  CHECK(back.width == enc.width);
  CHECK(back.q_roi == enc.q_roi);
  REQUIRE(back.regions.size() == enc.regions.size());
  CHECK(back.background == enc.background);

  // decode -> re-encode reproduces identical header bytes
  const auto again = serialize(back);
  CHECK(std::equal(bytes.begin(), bytes.begin() + 18, again.begin()));
  CHECK(again == bytes);

  // corrupt magic: structured error, no partial result
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize(bad), CodecError);

  // trailing garbage rejected
  auto extra = bytes;
  extra.push_back(0);
  CHECK_THROWS_AS(deserialize(extra), CodecError);
}

TEST_CASE("every truncation yields a structured error") {
  const Frame f = textured(4, 96, 64, 6);
  RoiPlan plan;
  plan.rois = {{8, 8, 40, 40}};
  const auto bytes = serialize(encode_frame(f, plan));
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const std::size_t cut = static_cast<std::size_t>(
        rng.uniform01() * static_cast<double>(bytes.size() - 1));
    std::vector<std::uint8_t> trunc(bytes.begin(), bytes.begin() + cut);
    bool threw = false;
    try {
      const EncodedFrame enc = deserialize(trunc);
      decode_frame(enc);
    } catch (const CodecError&) {
      threw = true;
    }
    CHECK(threw);
  }
}

TEST_CASE("payload size grows with background quality") {
  const Frame f = textured(6, 320, 240, 14);
  RoiPlan plan;
  plan.q_roi = 90;
  plan.rois = {{32, 32, 96, 96}};
  std::size_t prev = 0;
  for (int q_bg : {10, 30, 50, 70, 90}) {
    plan.q_bg = q_bg;
    const auto size = encode_frame(f, plan).total_size();
    CHECK(size >= prev);
    prev = size;
  }
}
