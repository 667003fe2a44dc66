// Serial reference kernels against their OpenMP counterparts.
//
//   ./fbcast_bench --benchmark_filter=Outage
//
// The Arg of each parallel benchmark is the thread count.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "fbcast/fbmoac.hpp"
#include "fbcast/harness.hpp"

namespace {

using namespace fbcast;

struct OutageCase {
  RadioConfig radio;
  SlotAction action{{0.2}, {2.0}, 1};
  OutageCase() {
    radio.num_files_N = 1;
    radio.cache_cap_C = 1;
    radio.path_loss_ref = radio.p_tx * radio.antenna_gain / (radio.n0 * radio.rate_R * 1e-4);
  }
};

constexpr std::uint64_t kSamples = 200000;

void BM_OutageSerial(benchmark::State& st) {
  const OutageCase c;
  for (auto _ : st) benchmark::DoNotOptimize(mc_outage_oracle_serial(c.radio, c.action, 0, kSamples, 1));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * kSamples));
}

void BM_OutageParallel(benchmark::State& st) {
  const OutageCase c;
  omp_set_num_threads(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(mc_outage_oracle(c.radio, c.action, 0, kSamples, 1));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * kSamples));
}

struct EvalCase {
  ExperimentConfig cfg = preset("tiny");
  Environment env;
  PolicyHead head;
  std::vector<std::uint64_t> seeds;
  EvalCase() {
    cfg.resolve();
    env = environment(cfg);
    head = make_policy_head(cfg.radio.num_files_N, cfg.radio.cache_cap_C, cfg.learner.menu, cfg.learner.hidden, 1);
    seeds = eval_seeds(cfg);
  }
  PolicyFactory factory() const {
    return [this] { return std::make_unique<HeadPolicy>(head, true); };
  }
};

void BM_EvaluateSerial(benchmark::State& st) {
  const EvalCase c;
  const auto make = c.factory();
  for (auto _ : st) benchmark::DoNotOptimize(evaluate_policy_serial(make, c.env, c.seeds));
}

void BM_EvaluateParallel(benchmark::State& st) {
  const EvalCase c;
  const auto make = c.factory();
  omp_set_num_threads(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(evaluate_policy(make, c.env, c.seeds));
}

void thread_counts(benchmark::internal::Benchmark* b) {
  for (int t = 1; t <= omp_get_num_procs(); t *= 2) b->Arg(t);
  if ((omp_get_num_procs() & (omp_get_num_procs() - 1)) != 0) b->Arg(omp_get_num_procs());
}

BENCHMARK(BM_OutageSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OutageParallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EvaluateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateParallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
