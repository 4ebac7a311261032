#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cloudeye/mining.hpp"
#include "cloudeye/scenario.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace cloudeye;
using namespace cloudeye::testing;

namespace {

// plants ref descriptors for a target whose box center sits exactly on a cell
// center; quadrant points land exactly 2 cells away for a 64x64 box at stride 8
struct Planted {
  FeatureMap ref_map;
  FeatureMap cur_map;
  SamplePoints samples;
  std::vector<float> inv_std;
  int stride = 8;
};

Planted make_planted(int du, int dv, Rng& rng, double noise = 0.0,
                     int grid_w = 40, int grid_h = 30) {
  Planted p;
  const int ch = 8;
  p.ref_map = planted_map(0, grid_w, grid_h, p.stride, ch);
  p.cur_map = planted_map(1, grid_w, grid_h, p.stride, ch);
  p.inv_std.assign(ch, 1.0f);

  if (noise > 0.0) {
    for (int v = 0; v < grid_h; ++v) {
      for (int u = 0; u < grid_w; ++u) {
        set_cell(p.ref_map, 0, u, v, random_vec(rng, ch, noise));
        set_cell(p.cur_map, 0, u, v, random_vec(rng, ch, noise));
      }
    }
  }

  // reference box: 64x64 centered on cell (12,10) center
  const double cx = (12 + 0.5) * p.stride;
  const double cy = (10 + 0.5) * p.stride;
  Detection det{BoundingBox::from_center(cx, cy, 64, 64), 3, 0.9, Source::Cloud};

  std::vector<std::vector<float>> vecs;
  for (int i = 0; i < 5; ++i) vecs.push_back(random_vec(rng, ch, 4.0));
  const int pu[5] = {12, 10, 14, 10, 14};
  const int pv[5] = {10, 8, 8, 12, 12};
  for (int i = 0; i < 5; ++i) {
    set_cell(p.ref_map, 0, pu[i], pv[i], vecs[i]);
    set_cell(p.cur_map, 0, pu[i] + du, pv[i] + dv, vecs[i]);
  }
  p.samples = sample_descriptors(det, p.ref_map);
  return p;
}

}  // namespace

TEST_CASE("select_layer picks the stride nearest sqrt(area)/4") {
  FeatureMap fmap;
  for (int stride : {4, 8, 16}) {
    FeatureLayer layer;
    layer.stride = stride;
    layer.channels = 1;
    layer.grid_w = layer.grid_h = 4;
    layer.data.assign(16, 0.0f);
    fmap.layers.push_back(layer);
  }
  CHECK(select_layer({0, 0, 32, 32}, fmap) == 1);     // sqrt(1024)/4 = 8
  CHECK(select_layer({0, 0, 300, 300}, fmap) == 2);   // clamps to largest
  CHECK(select_layer({0, 0, 8, 8}, fmap) == 0);

  FeatureMap single;
  single.layers.push_back(fmap.layers[2]);
  CHECK(select_layer({0, 0, 8, 8}, single) == 0);
}

TEST_CASE("search_region combines, pads and clamps") {
  const auto r1 = search_region({10, 10, 20, 20}, {12, 8, 26, 18}, 4, 100, 100);
  CHECK(r1.box.x_min == doctest::Approx(6));
  CHECK(r1.box.y_min == doctest::Approx(4));
  CHECK(r1.box.x_max == doctest::Approx(30));
  CHECK(r1.box.y_max == doctest::Approx(24));

  const auto r2 = search_region({10, 10, 20, 20}, {10, 10, 20, 20}, 0, 100, 100);
  CHECK(r2.box.x_min == doctest::Approx(10));
  CHECK(r2.box.x_max == doctest::Approx(20));

  const auto r3 = search_region({0, 0, 20, 20}, {0, 0, 20, 20}, 50, 100, 80);
  CHECK(r3.box.x_min == 0);
  CHECK(r3.box.y_min == 0);
  CHECK(r3.box.x_max == doctest::Approx(70));
  CHECK(r3.box.y_max == doctest::Approx(70));
}

TEST_CASE("sample_descriptors geometry and planted values") {
  Rng rng(5);
  FeatureMap fmap = planted_map(0, 20, 20, 8, 4);
  // distinct planted vector per cell
  std::vector<std::vector<float>> planted(400);
  for (int v = 0; v < 20; ++v) {
    for (int u = 0; u < 20; ++u) {
      planted[v * 20 + u] = random_vec(rng, 4);
      set_cell(fmap, 0, u, v, planted[v * 20 + u]);
    }
  }

  // 2x2-cell box: quadrant points in four distinct cells
  Detection det{{32, 32, 48, 48}, 0, 1.0, Source::Cloud};
  const auto sp = sample_descriptors(det, fmap);
  CHECK_FALSE(sp.degenerate);
  const int cells[5][2] = {{5, 5}, {4, 4}, {5, 4}, {4, 5}, {5, 5}};
  for (int i = 0; i < 5; ++i) {
    const auto& expect = planted[cells[i][1] * 20 + cells[i][0]];
    CHECK(sp.descriptors[i] == expect);
  }

  // degenerate: box under 2x2 cells collapses p1..p4 onto p0
  Detection tiny{{33, 33, 43, 43}, 0, 1.0, Source::Cloud};
  const auto sp_tiny = sample_descriptors(tiny, fmap);
  CHECK(sp_tiny.degenerate);
  for (int i = 1; i < 5; ++i) {
    CHECK(sp_tiny.descriptors[i] == sp_tiny.descriptors[0]);
  }
}

TEST_CASE("match_target recovers a planted offset in round 1") {
  Rng rng(42);
  Planted p = make_planted(3, 2, rng);
  MiningParams params;
  const auto region = search_region(p.samples.box, p.samples.box, 60, 320, 240);
  const auto result = match_target(p.samples, p.cur_map, p.inv_std, region, params);

  REQUIRE(result.detection.has_value());
  CHECK(result.rounds == 1);
  CHECK_FALSE(result.conservative);
  CHECK(result.group_loss < params.epsilon);
  const auto c = result.detection->box.center();
  CHECK(c.x == doctest::Approx((12 + 3 + 0.5) * 8));
  CHECK(c.y == doctest::Approx((10 + 2 + 0.5) * 8));
  // same scale: the recovered box reproduces the reference extents
  CHECK(result.detection->box.width() == doctest::Approx(64));
  CHECK(result.detection->box.height() == doctest::Approx(64));
  CHECK(result.detection->class_id == 3);
  CHECK(result.confidence > 0.0);
  CHECK(result.confidence <= 1.0);
}

TEST_CASE("match_target equals the exhaustive oracle on randomized plants") {
  Rng rng(7);
  MiningParams params;
  for (int trial = 0; trial < 25; ++trial) {
    const int du = rng.uniform_int(-4, 5);
    const int dv = rng.uniform_int(-4, 5);
    Planted p = make_planted(du, dv, rng, 0.05);
    const auto region = search_region(p.samples.box, p.samples.box, 60, 320, 240);
    const auto got = match_target(p.samples, p.cur_map, p.inv_std, region, params);
    const auto oracle = exhaustive_match_oracle(p.samples, p.cur_map, p.inv_std,
                                                region, params.occlusion_threshold);
    REQUIRE(got.detection.has_value());
    REQUIRE(oracle.found);
    const auto c = got.detection->box.center();
    CHECK(c.x == doctest::Approx((oracle.u0 + 0.5) * 8));
    CHECK(c.y == doctest::Approx((oracle.v0 + 0.5) * 8));
    CHECK(got.detection->box.width() == doctest::Approx(oracle.box.width()));
    CHECK(got.detection->box.height() == doctest::Approx(oracle.box.height()));
  }
}

TEST_CASE("match_target reports occlusion on a noise-filled frame") {
  Rng rng(99);
  Planted p = make_planted(0, 0, rng);
  // overwrite the current map with noise far from the reference descriptors
  for (int v = 0; v < 30; ++v) {
    for (int u = 0; u < 40; ++u) {
      set_cell(p.cur_map, 0, u, v, random_vec(rng, 8, 2.0));
    }
  }
  MiningParams params;
  const auto region = search_region(p.samples.box, p.samples.box, 60, 320, 240);
  const auto result = match_target(p.samples, p.cur_map, p.inv_std, region, params);
  CHECK_FALSE(result.detection.has_value());
  CHECK(result.failure == MatchFailure::Occluded);
  CHECK(result.group_loss > params.occlusion_threshold);
}

TEST_CASE("conservative strategy keeps the reference scale") {
  Rng rng(15);
  Planted p = make_planted(0, 0, rng);
  // zero out the two bottom quadrant matches: their group-loss contribution
  // lands between epsilon and the occlusion threshold
  set_cell(p.cur_map, 0, 10, 12, std::vector<float>(8, 0.0f));
  set_cell(p.cur_map, 0, 14, 12, std::vector<float>(8, 0.0f));
  MiningParams params;
  params.epsilon = 1.0;
  params.occlusion_threshold = 50.0;
  params.depth = 3;
  const auto region = search_region(p.samples.box, p.samples.box, 60, 320, 240);
  const auto result = match_target(p.samples, p.cur_map, p.inv_std, region, params);
  REQUIRE(result.detection.has_value());
  CHECK(result.conservative);
  CHECK(result.rounds == params.depth);
  // center still at the intact p0 match, scale copied from the reference
  const auto c = result.detection->box.center();
  CHECK(c.x == doctest::Approx((12 + 0.5) * 8));
  CHECK(c.y == doctest::Approx((10 + 0.5) * 8));
  CHECK(result.detection->box.width() == doctest::Approx(p.samples.box.width()));
  CHECK(result.detection->box.height() == doctest::Approx(p.samples.box.height()));
}

TEST_CASE("penalty steers the search away from a failed round-1 match") {
  Rng rng(21);
  const int ch = 8;
  FeatureMap cur = planted_map(1, 40, 30, 8, ch);
  FeatureMap ref_map = planted_map(0, 40, 30, 8, ch);
  std::vector<float> inv_std(ch, 1.0f);

  std::vector<std::vector<float>> vecs;
  for (int i = 0; i < 5; ++i) vecs.push_back(random_vec(rng, ch, 4.0));
  // reference target centered on cell (12,10), 64x64
  const int pu[5] = {12, 10, 14, 10, 14};
  const int pv[5] = {10, 8, 8, 12, 12};
  for (int i = 0; i < 5; ++i) set_cell(ref_map, 0, pu[i], pv[i], vecs[i]);
  Detection det{BoundingBox::from_center(12.5 * 8, 10.5 * 8, 64, 64), 0, 1.0,
                Source::Cloud};
  const auto samples = sample_descriptors(det, ref_map);

  // decoy p0 at (6,6) row-major BEFORE the true location (18,14); quadrant
  // descriptors exist only around the true location
  set_cell(cur, 0, 6, 6, vecs[0]);
  const int du = 6, dv = 4;
  for (int i = 0; i < 5; ++i) set_cell(cur, 0, pu[i] + du, pv[i] + dv, vecs[i]);

  MiningParams params;
  params.depth = 3;
  SearchRegion region = search_region({0, 0, 319, 239}, {0, 0, 319, 239}, 0, 320, 240);
  region.feature_layer_index = 0;
  const auto result = match_target(samples, cur, inv_std, region, params);
  REQUIRE(result.detection.has_value());
  CHECK(result.rounds > 1);  // decoy won round 1, penalty recovered
  CHECK_FALSE(result.conservative);
  const auto c = result.detection->box.center();
  CHECK(c.x == doctest::Approx((12 + du + 0.5) * 8));
  CHECK(c.y == doctest::Approx((10 + dv + 0.5) * 8));
}

TEST_CASE("confidence decreases with group loss and stays in (0,1]") {
  // probe the confidence shape through planted matches with added descriptor
  // distance: compare two different corrupted magnitudes
  auto run = [&](float delta) {
    Rng local(11);
    Planted p = make_planted(0, 0, local);
    std::vector<float> v = p.samples.descriptors[1];
    v[0] += delta;
    set_cell(p.cur_map, 0, 10, 8, v);
    MiningParams mp;
    mp.epsilon = 100.0;  // always accept so confidence reflects loss only
    mp.occlusion_threshold = 1000.0;
    const auto region = search_region(p.samples.box, p.samples.box, 20, 320, 240);
    return match_target(p.samples, p.cur_map, p.inv_std, region, mp);
  };
  const auto low = run(0.3f);
  const auto high = run(1.5f);
  REQUIRE(low.detection.has_value());
  REQUIRE(high.detection.has_value());
  CHECK(low.group_loss < high.group_loss);
  CHECK(low.confidence > high.confidence);
  CHECK(high.confidence > 0.0);
  CHECK(low.confidence <= 1.0);
}

TEST_CASE("mine_frame appends exactly the missed planted targets") {
  // static rendered scene: reference from frame 0, mining on frame 1
  SyntheticSpec spec;
  spec.frames = 2;
  spec.width = 320;
  spec.height = 240;
  spec.fps = 30;
  spec.seed = 77;
  spec.explicit_targets = {
      {40, 40, 0, 0, 48, 48, 0},
      {150, 60, 0, 0, 56, 56, 0},
      {80, 150, 0, 0, 44, 44, 0},
  };
  SyntheticSource source(spec);
  const auto gts = source.ground_truths();
  const ExtractorConfig excfg{{4, 8, 16}, 16, 5};

  const Frame f0 = source.frame(0);
  const Frame f1 = source.frame(1);
  const FeatureMap fmap0 = extract_features(f0, excfg);
  const FeatureMap fmap1 = extract_features(f1, excfg);

  std::vector<Detection> cloud_dets;
  for (const auto& b : gts[0].boxes) {
    cloud_dets.push_back({b.box, b.class_id, 1.0, Source::Cloud});
  }
  const ReferenceFrame ref = make_reference(0, cloud_dets, fmap0);

  // edge only found targets 0 and 2
  std::vector<Detection> edge_dets{
      {gts[1].boxes[0].box, 0, 1.0, Source::Tracked},
      {gts[1].boxes[2].box, 0, 1.0, Source::Tracked},
  };
  MiningParams params;
  const auto outcome = mine_frame(fmap1, edge_dets, {}, ref, params);
  CHECK(outcome.mined == 1);
  REQUIRE(outcome.detections.size() == 3);
  CHECK(outcome.detections[0].source == Source::Tracked);
  CHECK(outcome.detections[1].source == Source::Tracked);
  CHECK(outcome.detections[2].source == Source::Mined);
  CHECK(iou(outcome.detections[2].box, gts[1].boxes[1].box) > 0.5);

  // nothing to mine when the edge covers everything
  std::vector<Detection> all_edge;
  for (const auto& b : gts[1].boxes) {
    all_edge.push_back({b.box, b.class_id, 1.0, Source::Tracked});
  }
  const auto covered = mine_frame(fmap1, all_edge, {}, ref, params);
  CHECK(covered.mined == 0);
  CHECK(covered.detections.size() == 3);

  // vacuous reference
  const ReferenceFrame empty_ref = make_reference(0, {}, fmap0);
  const auto vacuous = mine_frame(fmap1, edge_dets, {}, empty_ref, params);
  CHECK(vacuous.mined == 0);
  CHECK(vacuous.detections.size() == edge_dets.size());
}

TEST_CASE("mine_frame never mutates edge detections") {
  SyntheticSpec spec;
  spec.frames = 2;
  spec.seed = 12;
  spec.explicit_targets = {{60, 60, 0, 0, 48, 48, 0}, {200, 120, 0, 0, 40, 40, 0}};
  SyntheticSource source(spec);
  const ExtractorConfig excfg{{4, 8, 16}, 16, 5};
  const FeatureMap fmap0 = extract_features(source.frame(0), excfg);
  const FeatureMap fmap1 = extract_features(source.frame(1), excfg);
  const auto gts = source.ground_truths();
  std::vector<Detection> cloud_dets;
  for (const auto& b : gts[0].boxes) {
    cloud_dets.push_back({b.box, b.class_id, 1.0, Source::Cloud});
  }
  const ReferenceFrame ref = make_reference(0, cloud_dets, fmap0);
  std::vector<Detection> edge{{gts[1].boxes[0].box, 0, 0.7, Source::Tracked}};
  const auto outcome = mine_frame(fmap1, edge, {}, ref, {});
  REQUIRE(outcome.detections.size() >= 1);
  CHECK(outcome.detections[0].box.x_min == edge[0].box.x_min);
  CHECK(outcome.detections[0].confidence == 0.7);
  CHECK(outcome.detections[0].source == Source::Tracked);
}

TEST_CASE("refresh_reference: fresh, chained-static, evicted") {
  SyntheticSpec spec;
  spec.frames = 14;
  spec.seed = 31;
  // box aligned so its center sits on a feature-cell center and its quadrant
  // points on cell centers: chained matches reproduce it exactly
  spec.explicit_targets = {{40, 40, 0, 0, 64, 64, 0}};
  SyntheticSource source(spec);
  const ExtractorConfig excfg{{4, 8, 16}, 16, 5};
  const auto gts = source.ground_truths();

  FrameCache cache(32);
  for (int i = 0; i < 12; ++i) {
    const Frame f = source.frame(i);
    cache.push(f, extract_features(f, excfg), {});
  }
  std::vector<Detection> cloud{{gts[0].boxes[0].box, 0, 1.0, Source::Cloud}};

  MiningParams params;
  params.reference_staleness_threshold = 15;
  // fresh: cloud frame within the threshold is used verbatim
  auto fresh = refresh_reference(cache, 11, cloud, params, 0.0);
  REQUIRE(fresh.reference.has_value());
  CHECK(fresh.reference->frame_id == 11);
  CHECK(fresh.hops == 0);

  // stale: chained forward; static scene keeps the box unchanged
  params.reference_staleness_threshold = 3;
  auto chained = refresh_reference(cache, 0, cloud, params, 0.0);
  REQUIRE(chained.reference.has_value());
  CHECK(chained.reference->frame_id == 11);
  CHECK(chained.hops == 11);
  REQUIRE(chained.reference->detections.size() == 1);
  const auto& box = chained.reference->detections[0].box;
  CHECK(box.x_min == doctest::Approx(40));
  CHECK(box.y_min == doctest::Approx(40));
  CHECK(box.x_max == doctest::Approx(104));
  CHECK(box.y_max == doctest::Approx(104));

  // evicted cloud frame flags a rebuild
  FrameCache small(4);
  for (int i = 8; i < 12; ++i) {
    const Frame f = source.frame(i);
    small.push(f, extract_features(f, excfg), {});
  }
  auto evicted = refresh_reference(small, 0, cloud, params, 0.0);
  CHECK(evicted.evicted);
  CHECK_FALSE(evicted.reference.has_value());
}

TEST_CASE("staleness threshold shortens for faster targets") {
  SyntheticSpec spec;
  spec.frames = 3;
  spec.seed = 1;
  spec.explicit_targets = {{36, 36, 0, 0, 64, 64, 0}};
  SyntheticSource source(spec);
  const ExtractorConfig excfg{{4, 8, 16}, 16, 5};
  FrameCache cache(8);
  for (int i = 0; i < 3; ++i) {
    const Frame f = source.frame(i);
    cache.push(f, extract_features(f, excfg), {});
  }
  std::vector<Detection> cloud{{{36, 36, 100, 100}, 0, 1.0, Source::Cloud}};
  MiningParams params;
  const auto slow = refresh_reference(cache, 2, cloud, params, 0.5);
  const auto fast = refresh_reference(cache, 2, cloud, params, 8.0);
  CHECK(fast.new_staleness_threshold < slow.new_staleness_threshold);
}
