#include <benchmark/benchmark.h>

#include "maqm/protocol.hpp"
#include "maqm/schedule.hpp"

namespace {

void BM_Compile(benchmark::State& state) {
  const auto cfg = state.range(0) == 2 ? maqm::ProtocolConfig::qubit_defaults() : maqm::ProtocolConfig::qudit_defaults();
  const auto constraints = maqm::ScheduleConstraints::from_specs(cfg.maqm1, cfg.maqm2);
  for (auto _ : state) benchmark::DoNotOptimize(maqm::compile(cfg, constraints));
}
BENCHMARK(BM_Compile)->Arg(2)->Arg(4);

void BM_EmitJsonl(benchmark::State& state) {
  const auto cfg = maqm::ProtocolConfig::qudit_defaults();
  const auto schedule = maqm::compile(cfg, maqm::ScheduleConstraints::from_specs(cfg.maqm1, cfg.maqm2));
  for (auto _ : state) benchmark::DoNotOptimize(maqm::emit_jsonl(schedule));
}
BENCHMARK(BM_EmitJsonl);

}  // namespace
