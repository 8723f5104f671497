#include <benchmark/benchmark.h>

#include "gmsfem/gmsfem.hpp"

using namespace gmsfem;

namespace {

PermeabilityField field_for(const NestedMesh& mesh) {
  return generate_field(preset_with_contrast("fig2a", 1e4), mesh);
}

Selection threshold(double lambda_off) {
  Selection s;
  s.policy = SelectionPolicy::ThresholdGe;
  s.lambda_off = lambda_off;
  return s;
}

}  // namespace

// args: coarse blocks per side, fine cells per block side
void BM_FineSolve(benchmark::State& state) {
  const auto mesh = NestedMesh::build(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const auto sys = assemble(mesh, field_for(mesh), nullptr, {1, 0});
  for (auto _ : state) benchmark::DoNotOptimize(solve_mixed(sys));
  state.counters["dofs"] = static_cast<double>(sys.A.rows() + sys.B.rows());
}
BENCHMARK(BM_FineSolve)->Args({4, 4})->Args({8, 4})->Args({10, 10})->Unit(benchmark::kMillisecond);

void BM_OfflinePipeline(benchmark::State& state) {
  const auto mesh = NestedMesh::build(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const auto field = field_for(mesh);
  for (auto _ : state) {
    const OfflinePipeline pipe(mesh, field);
    benchmark::DoNotOptimize(pipe.build(threshold(1.0 / 3)));
  }
}
BENCHMARK(BM_OfflinePipeline)->Args({4, 4})->Args({8, 4})->Unit(benchmark::kMillisecond);

void BM_CoarseSolve(benchmark::State& state) {
  const auto mesh = NestedMesh::build(8, 4);
  const auto field = field_for(mesh);
  const OfflinePipeline pipe(mesh, field);
  const auto off = pipe.build(threshold(1.0 / static_cast<double>(state.range(0))));
  const auto sys = assemble(mesh, field, nullptr, {1, 0});
  const Vector lift = pipe.lifting({1, 0});
  for (auto _ : state) benchmark::DoNotOptimize(solve_coarse(sys, off, &lift));
  state.counters["basis"] = static_cast<double>(off.num_basis());
}
BENCHMARK(BM_CoarseSolve)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
