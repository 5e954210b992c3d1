// Serial vs OpenMP timings for the hot kernels. Arg(0) is serial, Arg(1) parallel.
#include <benchmark/benchmark.h>

#include "graf/features.hpp"
#include "graf/metrics.hpp"
#include "graf/rng.hpp"
#include "graf/synth.hpp"
#include "graf/tree_models.hpp"

using namespace graf;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::kParallel : Exec::kSerial; }

struct Fixture {
  SearchSpaceSpec spec = builtin_space("nb201_like");
  FeatureSchema schema = feature_schema(spec);
  std::vector<Architecture> archs;
  DenseMatrix x, y;

  Fixture() {
    for (const auto& c : enumerate_cells(spec, true)) archs.emplace_back(std::vector<CellGraph>{c});
    x = extract_graf_batch(archs, spec, schema);
    const Dataset ds = build_space_dataset(spec, SynthConfig{});
    y = DenseMatrix::from_column(ds.target("val_acc"));
  }
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

void BM_Extract(benchmark::State& st) {
  const auto& f = fx();
  for (auto _ : st) benchmark::DoNotOptimize(extract_graf_batch(f.archs, f.spec, f.schema, exec_of(st)));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(f.archs.size()));
}
BENCHMARK(BM_Extract)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ForestFit(benchmark::State& st) {
  const auto& f = fx();
  Rng rng(1);
  const auto rows = rng.sample_without_replacement(f.x.rows(), 1024);
  const DenseMatrix x = f.x.select_rows(rows), y = f.y.select_rows(rows);
  ForestConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(fit_forest(x, y, cfg, 0, exec_of(st)));
}
BENCHMARK(BM_ForestFit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ForestPredict(benchmark::State& st) {
  const auto& f = fx();
  Rng rng(2);
  const auto rows = rng.sample_without_replacement(f.x.rows(), 1024);
  const auto model = fit_forest(f.x.select_rows(rows), f.y.select_rows(rows), ForestConfig{});
  for (auto _ : st) benchmark::DoNotOptimize(model.predict(f.x, {}, exec_of(st)));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(f.x.rows()));
}
BENCHMARK(BM_ForestPredict)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Kendall(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  Rng rng(3);
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = static_cast<double>(rng.below(100));
    b[i] = a[i] + static_cast<double>(rng.below(50));
  }
  for (auto _ : st) benchmark::DoNotOptimize(kendall_tau(a, b));
}
BENCHMARK(BM_Kendall)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
