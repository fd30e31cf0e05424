#include <benchmark/benchmark.h>

#include "detlab/ensembles.hpp"
#include "detlab/free_convolution.hpp"
#include "detlab/mde.hpp"
#include "detlab/reference.hpp"
#include "detlab/spectral.hpp"

using namespace detlab;

namespace {

void BM_EigvalsSym(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const SymMatrix h = sample(model::Wigner{n, EntryDistribution::gaussian(), 0.0}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(eigvals_sym(h));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EigvalsSym)->RangeMultiplier(2)->Range(50, 800)->Unit(benchmark::kMillisecond)->Complexity();

// One Monte Carlo draw of the det-growth loop: sample, diagonalize, sum logs.
void BM_DetGrowthSample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const EnsembleSpec spec = model::Wigner{n, EntryDistribution::gaussian(), 0.0};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sign_log_abs_det(eigvals_sym(sample(spec, ++seed))));
}
BENCHMARK(BM_DetGrowthSample)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_SemicircleLogPotential(benchmark::State& state) {
  const auto sc = ReferenceMeasure::semicircle();
  double e = -3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sc.log_potential(e));
    e = e > 3.0 ? -3.0 : e + 1e-3;
  }
}
BENCHMARK(BM_SemicircleLogPotential);

void BM_GridLogPotential(benchmark::State& state) {
  const auto grid = ReferenceMeasure::semicircle().smoothed(1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(grid.log_potential(0.3));
}
BENCHMARK(BM_GridLogPotential);

void BM_MdeSolveFlat(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const MdeProblem p = MdeProblem::flat(SymMatrix(n));
  for (auto _ : state) benchmark::DoNotOptimize(mde_solve(p, {0.3, 0.05}));
}
BENCHMARK(BM_MdeSolveFlat)->Arg(20)->Arg(100);

void BM_FreeConvolutionPoint(benchmark::State& state) {
  const auto sc = ReferenceMeasure::semicircle();
  const auto mp = ReferenceMeasure::marchenko_pastur(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(free_convolution_point(sc, mp, {0.7, 0.05}));
}
BENCHMARK(BM_FreeConvolutionPoint);

}  // namespace

BENCHMARK_MAIN();
