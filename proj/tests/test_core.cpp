#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "cloudeye/feature_map.hpp"
#include "cloudeye/frame.hpp"
#include "cloudeye/metrics.hpp"
#include "cloudeye/scripted_model.hpp"
#include "helpers.hpp"

using namespace cloudeye;
using namespace cloudeye::testing;

TEST_CASE("iou identity and disjoint") {
  const BoundingBox a{0, 0, 1, 1};
  CHECK(iou(a, a) == doctest::Approx(1.0));
  CHECK(iou({0, 0, 1, 1}, {5, 5, 6, 6}) == 0.0);
}

TEST_CASE("iou overlap arithmetic matches rasterization oracle") {
  const BoundingBox a{0, 0, 2, 2};
  const BoundingBox b{1, 0, 3, 2};
  CHECK(iou(a, b) == doctest::Approx(1.0 / 3.0));
  CHECK(iou(a, b) == doctest::Approx(iou_raster_oracle(a, b)).epsilon(0.02));

  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    BoundingBox p{rng.uniform(0, 20), rng.uniform(0, 20), 0, 0};
    p.x_max = p.x_min + rng.uniform(1, 10);
    p.y_max = p.y_min + rng.uniform(1, 10);
    BoundingBox q{rng.uniform(0, 20), rng.uniform(0, 20), 0, 0};
    q.x_max = q.x_min + rng.uniform(1, 10);
    q.y_max = q.y_min + rng.uniform(1, 10);
    const double v = iou(p, q);
    CHECK(v == doctest::Approx(iou(q, p)));  // symmetric
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == doctest::Approx(iou_raster_oracle(p, q)).epsilon(0.05));
  }
}

TEST_CASE("frame_diff identity, extremal, half-inverted") {
  const Frame black = solid_frame(0, 16, 16, 0, 0, 0);
  const Frame white = solid_frame(1, 16, 16, 255, 255, 255);
  CHECK(frame_diff(black, black) == 0.0);
  CHECK(frame_diff(black, white) == doctest::Approx(1.0));

  // left half inverted on a binary frame -> counting oracle says 0.5
  Frame half = black;
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 8; ++x) {
      auto* p = half.px(x, y);
      p[0] = p[1] = p[2] = 255;
    }
  }
  CHECK(frame_diff(black, half) == doctest::Approx(0.5));

  Frame other = solid_frame(2, 8, 16, 0, 0, 0);
  CHECK_THROWS_AS(frame_diff(black, other), std::invalid_argument);
}

TEST_CASE("frame_diff is a metric on equal-size frames") {
  const Frame a = noise_frame(0, 12, 9, 11);
  const Frame b = noise_frame(1, 12, 9, 22);
  CHECK(frame_diff(a, b) == doctest::Approx(frame_diff(b, a)));
  CHECK(frame_diff(a, b) > 0.0);
  CHECK(frame_diff(a, a) == 0.0);
}

TEST_CASE("synthetic extract is deterministic and content-driven") {
  const ExtractorConfig cfg{{4, 8}, 8, 42};
  const Frame f = noise_frame(3, 40, 32, 5);
  const FeatureMap m1 = extract_features(f, cfg);
  const FeatureMap m2 = extract_features(f, cfg);
  REQUIRE(m1.layers.size() == 2);
  CHECK(m1.frame_id == 3);
  for (std::size_t l = 0; l < m1.layers.size(); ++l) {
    CHECK(m1.layers[l].data == m2.layers[l].data);  // bitwise
  }

  // uniform frame: every interior cell vector identical
  const Frame flat = solid_frame(4, 40, 32, 90, 120, 30);
  const FeatureMap mf = extract_features(flat, cfg);
  const auto& layer = mf.layers[0];
  const float* ref = layer.at(2, 2);
  for (int v = 1; v + 1 < layer.grid_h; ++v) {
    for (int u = 1; u + 1 < layer.grid_w; ++u) {
      for (int c = 0; c < layer.channels; ++c) {
        CHECK(layer.at(u, v)[c] == ref[c]);
      }
    }
  }
}

TEST_CASE("synthetic extract shift-equivariance on interior cells") {
  const int stride = 4;
  const ExtractorConfig cfg{{stride}, 8, 9};
  const int w = 48, h = 40;
  // content generated in "world" coordinates, then sampled with an offset
  auto world_pixel = [](int x, int y) {
    return static_cast<std::uint8_t>(mix64(std::uint64_t(x) * 7919 + y) & 0xff);
  };
  auto render = [&](int shift) {
    Frame f = solid_frame(shift, w, h, 0, 0, 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        auto* p = f.px(x, y);
        p[0] = world_pixel(x - shift, y);
        p[1] = world_pixel(x - shift, y + 1000);
        p[2] = world_pixel(x - shift, y + 2000);
      }
    }
    return f;
  };
  const FeatureMap base = extract_features(render(0), cfg);
  const FeatureMap shifted = extract_features(render(stride), cfg);
  const auto& l0 = base.layers[0];
  const auto& l1 = shifted.layers[0];
  // interior: patch of side 2*stride fully inside both frames
  for (int v = 1; v + 1 < l0.grid_h; ++v) {
    for (int u = 1; u + 2 < l0.grid_w; ++u) {
      for (int c = 0; c < l0.channels; ++c) {
        CHECK(l1.at(u + 1, v)[c] == l0.at(u, v)[c]);  // exact equality
      }
    }
  }
}

TEST_CASE("scripted_detect noiseless identity, forced drop, determinism") {
  const Frame f = solid_frame(7, 100, 100, 0, 0, 0);
  GroundTruth gt;
  gt.frame_id = 7;
  gt.boxes.push_back({{10, 10, 20, 20}, 0});  // small (100 px^2)
  gt.boxes.push_back({{30, 30, 80, 80}, 1});  // large

  ScriptedModelConfig noiseless;
  auto dets = scripted_detect(noiseless, gt, f, Source::Edge);
  REQUIRE(dets.size() == 2);
  CHECK(dets[0].box.x_min == 10);
  CHECK(dets[0].confidence == 1.0);
  CHECK(dets[1].class_id == 1);

  ScriptedModelConfig drop_small;
  drop_small.miss_rate_small = 1.0;
  dets = scripted_detect(drop_small, gt, f, Source::Edge);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].class_id == 1);

  ScriptedModelConfig noisy;
  noisy.box_jitter_sigma = 2.0;
  noisy.confidence_noise_sigma = 0.1;
  noisy.miss_rate_small = 0.5;
  noisy.rng_seed = 99;
  const auto a = scripted_detect(noisy, gt, f, Source::Edge);
  const auto b = scripted_detect(noisy, gt, f, Source::Edge);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].box.x_min == b[i].box.x_min);
    CHECK(a[i].confidence == b[i].confidence);
  }
}

TEST_CASE("evaluate_map trivial cases") {
  GroundTruth gt;
  gt.frame_id = 0;
  gt.boxes.push_back({{0, 0, 10, 10}, 0});
  gt.boxes.push_back({{20, 20, 40, 40}, 0});

  std::vector<Detection> perfect{{{0, 0, 10, 10}, 0, 1.0, Source::Edge},
                                 {{20, 20, 40, 40}, 0, 1.0, Source::Edge}};
  CHECK(evaluate_map({perfect}, {gt}).value == doctest::Approx(1.0));
  CHECK(evaluate_map({{}}, {gt}).value == 0.0);

  const MapResult no_gt = evaluate_map({{}}, {GroundTruth{0, {}}});
  CHECK(no_gt.value == 0.0);
  CHECK(no_gt.no_gt);
}

TEST_CASE("evaluate_map hand-computed PR curve") {
  // 1 class, 2 gts; one correct det at conf 0.9, one false at conf 0.8:
  // PR points (p=1.0,r=0.5), (p=0.5,r=0.5) -> all-point AP = 0.5
  GroundTruth gt;
  gt.frame_id = 0;
  gt.boxes.push_back({{0, 0, 10, 10}, 0});
  gt.boxes.push_back({{50, 50, 60, 60}, 0});
  std::vector<Detection> dets{{{0, 0, 10, 10}, 0, 0.9, Source::Edge},
                              {{80, 80, 90, 90}, 0, 0.8, Source::Edge}};
  CHECK(evaluate_map({dets}, {gt}).value == doctest::Approx(0.5));
}

namespace {

// Exhaustive PR oracle: recomputes AP from first principles for a single
// class by enumerating every prefix of the ranked detections.
double ap_oracle(std::vector<std::pair<double, bool>> ranked, int n_gt) {
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<double> précis, recalls;
  int tp = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    tp += ranked[k].second ? 1 : 0;
    précis.push_back(double(tp) / double(k + 1));
    recalls.push_back(double(tp) / n_gt);
  }
  double ap = 0.0;
  for (double r_level = 0.0; ; ) {
    // next distinct recall level
    double next = 2.0;
    for (double r : recalls) {
      if (r > r_level) next = std::min(next, r);
    }
    if (next > 1.5) break;
    double best_p = 0.0;
    for (std::size_t k = 0; k < recalls.size(); ++k) {
      if (recalls[k] >= next) best_p = std::max(best_p, précis[k]);
    }
    ap += (next - r_level) * best_p;
    r_level = next;
  }
  return ap;
}

}  // namespace

TEST_CASE("evaluate_map agrees with the exhaustive PR oracle") {
  Rng rng(123);
  for (int trial = 0; trial < 30; ++trial) {
    const int n_gt = rng.uniform_int(1, 6);
    GroundTruth gt;
    gt.frame_id = 0;
    for (int g = 0; g < n_gt; ++g) {
      const double x = 100.0 * g;
      gt.boxes.push_back({{x, 0, x + 10, 10}, 0});
    }
    std::vector<Detection> dets;
    const int n_det = rng.uniform_int(0, 8);
    for (int d = 0; d < n_det; ++d) {
      const double conf = rng.uniform(0.05, 1.0);
      if (rng.uniform01() < 0.6) {
        const int g = rng.uniform_int(0, n_gt);
        dets.push_back({gt.boxes[g].box, 0, conf, Source::Edge});
      } else {
        const double x = 100.0 * n_gt + 50.0 * d;
        dets.push_back({{x, 0, x + 10, 10}, 0, conf, Source::Edge});
      }
    }
    // label TPs greedily: only the highest-confidence exact hit per gt counts
    std::vector<Detection> sorted = dets;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Detection& a, const Detection& b) {
                       return a.confidence > b.confidence;
                     });
    std::set<double> matched_gt;
    std::vector<std::pair<double, bool>> ranked;
    for (const auto& d : sorted) {
      bool tp = false;
      for (const auto& g : gt.boxes) {
        if (d.box.x_min == g.box.x_min && !matched_gt.count(g.box.x_min)) {
          matched_gt.insert(g.box.x_min);
          tp = true;
          break;
        }
      }
      ranked.push_back({d.confidence, tp});
    }
    const double expect = ap_oracle(ranked, n_gt);
    const double got = evaluate_map({dets}, {gt}).value;
    CHECK(got == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("evaluate_map monotonicity: adding a high-confidence TP never hurts") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    GroundTruth gt;
    gt.frame_id = 0;
    const int n_gt = rng.uniform_int(2, 5);
    for (int g = 0; g < n_gt; ++g) {
      const double x = 100.0 * g;
      gt.boxes.push_back({{x, 0, x + 10, 10}, 0});
    }
    std::vector<Detection> dets;
    for (int d = 0; d < 3; ++d) {
      const double x = 1000.0 + 50.0 * d;
      dets.push_back({{x, 0, x + 10, 10}, 0, rng.uniform(0.1, 0.8), Source::Edge});
    }
    dets.push_back({gt.boxes[0].box, 0, 0.5, Source::Edge});
    const double before = evaluate_map({dets}, {gt}).value;
    auto more = dets;
    more.push_back({gt.boxes[1].box, 0, 0.95, Source::Edge});  // above all FPs
    const double after = evaluate_map({more}, {gt}).value;
    CHECK(after >= before - 1e-12);
  }
}

TEST_CASE("scripted edge model regress respects proposals") {
  AnnotationTable table;
  GroundTruth gt;
  gt.frame_id = 0;
  gt.boxes.push_back({{10, 10, 42, 42}, 0});
  gt.boxes.push_back({{100, 100, 140, 140}, 1});
  table.put(gt);
  const Frame f = solid_frame(0, 200, 200, 0, 0, 0);
  ScriptedEdgeModel model({}, {{8}, 4, 1}, &table);

  const FeatureMap features = model.extract(f);
  // only the first target is covered by a proposal
  auto dets = model.regress({{8, 8, 44, 44}}, features, f);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].class_id == 0);

  // proposals never yield more detections than their count
  dets = model.regress({{0, 0, 199, 199}}, features, f);
  CHECK(dets.size() == 1);

  CHECK(model.full_infer(f).size() == 2);
}
