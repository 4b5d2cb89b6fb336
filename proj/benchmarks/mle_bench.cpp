#include <benchmark/benchmark.h>

#include "maqm/detect.hpp"
#include "maqm/protocol.hpp"
#include "maqm/tomo.hpp"

namespace {

maqm::CountsTable default_counts(std::uint64_t heralds) {
  const auto out = maqm::run_transfer(maqm::ProtocolConfig::qubit_defaults());
  return maqm::sample_counts(out, maqm::tomography_settings(2), heralds, 1.0, 0.0, 42);
}

void BM_LinearInversion(benchmark::State& state) {
  const auto counts = default_counts(1000);
  for (auto _ : state) benchmark::DoNotOptimize(maqm::linear_inversion(counts));
}
BENCHMARK(BM_LinearInversion);

void BM_Mle(benchmark::State& state) {
  const auto counts = default_counts(static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(maqm::mle_reconstruct(counts));
}
BENCHMARK(BM_Mle)->Arg(1000)->Arg(100000)->Unit(benchmark::kMicrosecond);

void BM_MonteCarloFidelity(benchmark::State& state) {
  const auto out = maqm::run_transfer(maqm::ProtocolConfig::qubit_defaults());
  const auto counts = maqm::sample_counts(out, maqm::tomography_settings(2), 1000, 1.0, 0.0, 42);
  for (auto _ : state) benchmark::DoNotOptimize(maqm::monte_carlo_fidelity(counts, out.target, 100, 7));
}
BENCHMARK(BM_MonteCarloFidelity)->Unit(benchmark::kMillisecond);

}  // namespace
