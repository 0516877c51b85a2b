#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "campsim/kernels.hpp"
#include "campsim/trace.hpp"

namespace {

std::vector<campsim::CacheLine> sample_lines(std::size_t n) {
  campsim::GenParams p;
  p.kind = campsim::SyntheticKind::MixedStruct;
  p.count = n;
  p.seed = 11;
  std::vector<campsim::CacheLine> lines;
  lines.reserve(n);
  for (const auto& r : campsim::gen_synthetic(p)) lines.push_back(r.data);
  return lines;
}

const std::vector<campsim::CacheLine>& lines() {
  static const auto l = sample_lines(1 << 16);
  return l;
}

void BM_CompressSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(campsim::compress_batch_serial(lines()));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * lines().size()));
}

void BM_CompressOmp(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(campsim::compress_batch_omp(lines()));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * lines().size()));
}

void BM_TogglesSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(campsim::toggles_batch_serial(lines(), 32));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * lines().size()));
}

void BM_TogglesOmp(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(campsim::toggles_batch_omp(lines(), 32));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * lines().size()));
}

}  // namespace

BENCHMARK(BM_CompressSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CompressOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TogglesSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TogglesOmp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
