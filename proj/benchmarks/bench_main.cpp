#include <benchmark/benchmark.h>

#include "annulus/decomposition.hpp"
#include "annulus/hereditary.hpp"
#include "annulus/kernel.hpp"
#include "annulus/realization.hpp"
#include "annulus/solver.hpp"
#include "annulus/test_functions.hpp"

namespace {

using namespace annulus;

const AnnulusParams& params() {
  static const AnnulusParams p(0.25);
  return p;
}

std::shared_ptr<const AtomFunction> phi() {
  static const auto f = build_phi(params());
  return f;
}

const std::vector<cd> kNodes{{0.5, 0.0}, {0.4, 0.3}, {-0.6, 0.1}, {0.1, -0.45}};

void BM_KernelSeries(benchmark::State& state) {
  const cd z(0.4, 0.3), w(-0.6, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(kernel(params(), z, w));
}
BENCHMARK(BM_KernelSeries);

void BM_KernelTheta(benchmark::State& state) {
  const cd z(0.4, 0.3), w(-0.6, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(kernel(params(), z, w, 1.0, KernelMethod::theta));
}
BENCHMARK(BM_KernelTheta);

void BM_TestFunctionEval(benchmark::State& state) {
  const TestFunction tf = make_test_function(cd(0.6, 0.8), phi());
  const cd z(0.3, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(tf(z));
}
BENCHMARK(BM_TestFunctionEval);

void BM_HereditaryInverse(benchmark::State& state) {
  const PickModel m = pick_model(kNodes, std::vector<cd>(4, cd(0.3)), params());
  const CMatrix id = CMatrix::Identity(4, 4);
  for (auto _ : state) benchmark::DoNotOptimize(inv_k_hereditary(m.pair.T, id, params()));
}
BENCHMARK(BM_HereditaryInverse);

void BM_SolvePick(benchmark::State& state) {
  const auto atoms = static_cast<int>(state.range(0));
  const PickModel m = pick_model(kNodes, {{0.2, 0.0}, {0.1, 0.3}, {-0.4, 0.0}, {0.0, -0.2}}, params());
  const AtomicSystem sys = assemble_system(m.pair.T, m.pair.X, sample_test_set(atoms), params(), phi());
  for (auto _ : state) benchmark::DoNotOptimize(solve_atoms(sys));
}
BENCHMARK(BM_SolvePick)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_TransferEval(benchmark::State& state) {
  const Colligation col = random_colligation(sample_test_set(static_cast<int>(state.range(0))), 1, 1, 7, phi());
  const cd z(0.3, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(transfer_eval(col, z));
}
BENCHMARK(BM_TransferEval)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
