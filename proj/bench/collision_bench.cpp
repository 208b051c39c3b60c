// Serial reference vs OpenMP kernel for one collision sum Q(F, F).
//   ./kwave_bench --benchmark_filter=Parallel/8

#include <benchmark/benchmark.h>

#include "kwave/collision.hpp"
#include "kwave/velocity_moments.hpp"

using namespace kwave;

namespace {

std::vector<double> bimodal(const velocity::VelocityGrid& grid) {
  const auto a = velocity::maxwellian({0.5, {-1.0, 0.0, 0.0}, 1.5}, grid);
  const auto b = velocity::maxwellian({0.5, {1.0, 0.3, 0.0}, 1.5}, grid);
  std::vector<double> f(grid.size());
  for (std::size_t n = 0; n < f.size(); ++n) f[n] = a[n] + b[n];
  return f;
}

void BM_CollisionSerial(benchmark::State& state) {
  const velocity::VelocityGrid grid(5.0, static_cast<int>(state.range(0)));
  const collision::KernelConfig kernel;
  const auto f = bimodal(grid);
  for (auto _ : state) benchmark::DoNotOptimize(collision::kernels::collision_serial(f, f, grid, kernel));
}

void BM_CollisionParallel(benchmark::State& state) {
  const velocity::VelocityGrid grid(5.0, static_cast<int>(state.range(0)));
  const collision::KernelConfig kernel;
  const auto f = bimodal(grid);
  for (auto _ : state) benchmark::DoNotOptimize(collision::kernels::collision_parallel(f, f, grid, kernel));
}

}  // namespace

BENCHMARK(BM_CollisionSerial)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CollisionParallel)->Arg(8)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  log::set_quiet(true);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
