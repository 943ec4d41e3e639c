// Parallel kernels against their serial references.
//
//   ctxrnnt_bench --benchmark_filter=MatMul
//   OMP_NUM_THREADS=4 ctxrnnt_bench

#include <benchmark/benchmark.h>

#include <vector>

#include "ctxrnnt/context/geo_cluster.h"
#include "ctxrnnt/model/config.h"
#include "ctxrnnt/numerics/ops.h"
#include "ctxrnnt/training/objective.h"
#include "ctxrnnt/training/trainer.h"
#include "test_util.h"

using namespace ctxrnnt;

namespace {

template <Tensor (*Fn)(const Tensor&, const Tensor&)>
void BM_MatMul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = testing::random_tensor({n, n}, rng);
  const Tensor b = testing::random_tensor({n, n}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_MatMul<matmul>)->Name("MatMul/parallel")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_MatMul<matmul_reference>)->Name("MatMul/reference")->Arg(64)->Arg(256)->Arg(512);

struct GeoFixture {
  std::vector<GeoPoint> points;
  ClusterModel model;

  explicit GeoFixture(std::size_t n) {
    Rng rng(2);
    for (std::size_t i = 0; i < n; ++i) points.push_back({rng.uniform(25, 49), rng.uniform(-124, -67)});
    model = fit_geo_clusters(points, kDefaultGeoClusters, 3);
  }
};

void BM_AssignAll(benchmark::State& state) {
  const GeoFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assign_all(f.points, f.model));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_AssignReference(benchmark::State& state) {
  const GeoFixture f(static_cast<std::size_t>(state.range(0)));
  std::vector<int> ids(f.points.size());
  for (auto _ : state) {
    for (std::size_t i = 0; i < f.points.size(); ++i) ids[i] = assign_cluster(f.points[i], f.model);
    benchmark::DoNotOptimize(ids.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AssignAll)->Name("Assign/parallel")->Arg(100000);
BENCHMARK(BM_AssignReference)->Name("Assign/reference")->Arg(100000);

struct BatchFixture {
  TrainableModel tm;
  std::vector<Example> examples;
  std::vector<const Example*> batch;
  std::vector<std::size_t> indices;

  explicit BatchFixture(std::size_t n)
      : tm(TrainableModel::Create(ModelConfig::DeskScale(30, ContextKind::kCombinedTimeGeo), 4)) {
    Rng rng(5);
    const ModelConfig& cfg = tm.model.config();
    for (std::size_t i = 0; i < n; ++i) {
      Example ex;
      ex.features = testing::random_tensor({40, cfg.input_dim}, rng);
      ex.tokens = testing::random_labels(8, cfg.vocab_size, rng);
      ex.context.time = {static_cast<int>(i % 24), static_cast<int>(i % 7), 1 + static_cast<int>(i % 53),
                         1 + static_cast<int>(i % 12)};
      ex.context.cluster_id = static_cast<int>(i % 20);
      examples.push_back(std::move(ex));
    }
    for (std::size_t i = 0; i < n; ++i) {
      batch.push_back(&examples[i]);
      indices.push_back(i);
    }
  }
};

template <BatchGradients (*Fn)(const Objective&, const ParamStore&, std::span<const Example* const>,
                               std::span<const std::size_t>, std::uint64_t, std::uint64_t, bool)>
void BM_Batch(benchmark::State& state) {
  const BatchFixture f(static_cast<std::size_t>(state.range(0)));
  const Objective obj{f.tm.model, f.tm.encoder};
  for (auto _ : state) benchmark::DoNotOptimize(Fn(obj, f.tm.store, f.batch, f.indices, 7, 0, false));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Batch<batch_gradients>)->Name("BatchGradients/parallel")->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Batch<batch_gradients_reference>)
    ->Name("BatchGradients/reference")
    ->Arg(8)
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
