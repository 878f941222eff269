#include <benchmark/benchmark.h>

#include "ensflow/ensemble.hpp"
#include "ensflow/experiments.hpp"

using namespace ensflow;

namespace {

std::shared_ptr<const TaylorHoodSpace> square(int n) {
  auto mesh = std::make_shared<const Mesh>(generate_unit_square(n));
  return std::make_shared<const TaylorHoodSpace>(mesh, BoundaryPartition::all_dirichlet(*mesh));
}

EnsembleConfig config(int J, Algorithm a) {
  EnsembleConfig c;
  for (int j = 0; j < J; ++j) c.nu.push_back(1.0 + 0.05 * j);
  c.algorithm = a;
  c.gamma = is_second_order(a) ? select_gamma(c.nu).gamma : 0.0;
  c.dt0 = 1e-3;
  c.cfl.halve_on_violation = false;
  return c;
}

// One ensemble step: a single factorization shared by J solves.
void BM_EnsembleStep(benchmark::State& state) {
  const int J = static_cast<int>(state.range(0));
  const Algorithm a = state.range(1) == 1 ? Algorithm::kA1 : Algorithm::kA4;
  auto s = square(16);
  EnsembleSolver solver(s, config(J, a));
  std::vector<VectorField> u0;
  for (int j = 0; j < J; ++j) u0.push_back(random_stream_field(j, {0, 0}, {1, 1}, 0.1));
  EnsembleState st = solver.initial_state(u0);
  solver.step(st);
  for (auto _ : state) {
    EnsembleState copy = st;
    benchmark::DoNotOptimize(solver.step(copy));
  }
  state.counters["J"] = J;
  state.SetLabel(algorithm_name(a));
}
BENCHMARK(BM_EnsembleStep)
    ->ArgsProduct({{1, 2, 4, 8, 16}, {1, 4}})
    ->Unit(benchmark::kMillisecond);

void BM_AssembleCore(benchmark::State& state) {
  auto s = square(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_core(*s));
  state.counters["dofs"] = s->num_velocity() + s->num_pressure();
}
BENCHMARK(BM_AssembleCore)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_FactorizeStokes(benchmark::State& state) {
  auto s = square(static_cast<int>(state.range(0)));
  const OperatorSet ops = assemble_core(*s);
  const SaddleSystem sys = SaddleSystem::for_space(*s, ops, ops.K);
  for (auto _ : state) benchmark::DoNotOptimize(factorize(sys));
  state.counters["dofs"] = sys.size();
}
BENCHMARK(BM_FactorizeStokes)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
