// Serial vs OpenMP kernel comparison. Run with --benchmark_filter=... to
// narrow; the _serial/_omp pairs compute identical results by construction.

#include <benchmark/benchmark.h>

#include "cloudeye/feature_map.hpp"
#include "cloudeye/kernels.hpp"
#include "cloudeye/rng.hpp"
#include "cloudeye/scenario.hpp"

using namespace cloudeye;

namespace {

Frame bench_frame(int w, int h) {
  SyntheticSpec spec;
  spec.frames = 1;
  spec.width = w;
  spec.height = h;
  spec.seed = 7;
  spec.targets = 6;
  return render_frame(spec, make_targets(spec), 0);
}

void bm_abs_diff_serial(benchmark::State& state) {
  const Frame a = bench_frame(640, 480);
  const Frame b = bench_frame(640, 480);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::abs_diff_sum_serial(a.pixels, b.pixels));
  }
}
BENCHMARK(bm_abs_diff_serial);

void bm_abs_diff_omp(benchmark::State& state) {
  const Frame a = bench_frame(640, 480);
  const Frame b = bench_frame(640, 480);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::abs_diff_sum(a.pixels, b.pixels));
  }
}
BENCHMARK(bm_abs_diff_omp);

void bm_extract_serial(benchmark::State& state) {
  const Frame f = bench_frame(320, 240);
  const ExtractorConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_features_serial(f, cfg));
  }
}
BENCHMARK(bm_extract_serial);

void bm_extract_omp(benchmark::State& state) {
  const Frame f = bench_frame(320, 240);
  const ExtractorConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_features(f, cfg));
  }
}
BENCHMARK(bm_extract_omp);

struct CostMapFixture {
  FeatureMap fmap;
  std::vector<float> ref, inv_std;
  kernels::CellRect rect;

  CostMapFixture() {
    const Frame f = bench_frame(640, 480);
    fmap = extract_features(f, ExtractorConfig{{4}, 16, 3});
    const auto& layer = fmap.layers[0];
    ref.assign(layer.at(4, 4), layer.at(4, 4) + layer.channels);
    inv_std.assign(layer.channels, 1.0f);
    rect = {0, 0, layer.grid_w - 1, layer.grid_h - 1};
  }
};

void bm_cost_map_serial(benchmark::State& state) {
  static const CostMapFixture fx;
  std::vector<float> out;
  for (auto _ : state) {
    kernels::descriptor_cost_map_serial(fx.fmap.layers[0], fx.rect, fx.ref,
                                        fx.inv_std, nullptr, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(bm_cost_map_serial);

void bm_cost_map_omp(benchmark::State& state) {
  static const CostMapFixture fx;
  std::vector<float> out;
  for (auto _ : state) {
    kernels::descriptor_cost_map(fx.fmap.layers[0], fx.rect, fx.ref, fx.inv_std,
                                 nullptr, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(bm_cost_map_omp);

struct ScanFixture {
  std::vector<std::uint8_t> codes;
  std::vector<float> tables;
  ScanFixture() {
    Rng rng(5);
    codes.resize(200000 * 4);
    for (auto& c : codes) c = static_cast<std::uint8_t>(rng.uniform_int(0, 16));
    tables.resize(4 * 16);
    for (auto& t : tables) t = static_cast<float>(rng.uniform01());
  }
};

void bm_pq_scan_serial(benchmark::State& state) {
  static const ScanFixture fx;
  std::vector<float> out;
  for (auto _ : state) {
    kernels::pq_adc_scan_serial(fx.codes, 4, 16, fx.tables, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(bm_pq_scan_serial);

void bm_pq_scan_omp(benchmark::State& state) {
  static const ScanFixture fx;
  std::vector<float> out;
  for (auto _ : state) {
    kernels::pq_adc_scan(fx.codes, 4, 16, fx.tables, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(bm_pq_scan_omp);

struct AssignFixture {
  std::vector<double> points, centroids;
  AssignFixture() {
    Rng rng(11);
    points.resize(100000 * 2);
    for (auto& p : points) p = rng.uniform(0, 1000);
    centroids.resize(16 * 2);
    for (auto& c : centroids) c = rng.uniform(0, 1000);
  }
};

void bm_assign_serial(benchmark::State& state) {
  static const AssignFixture fx;
  std::vector<int> out;
  for (auto _ : state) {
    kernels::assign_nearest_serial(fx.points, 2, fx.centroids, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(bm_assign_serial);

void bm_assign_omp(benchmark::State& state) {
  static const AssignFixture fx;
  std::vector<int> out;
  for (auto _ : state) {
    kernels::assign_nearest(fx.points, 2, fx.centroids, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(bm_assign_omp);

}  // namespace

BENCHMARK_MAIN();
