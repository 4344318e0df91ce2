// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "tinyeats/corpus.hpp"
#include "tinyeats/qinfer.hpp"
#include "tinyeats/trainer.hpp"

namespace {

using namespace tinyeats;

FeatureWindow sample_window() { return extract_features(synth_eating(1, 4.0)).at(0); }

void BM_ExtractFeatures(benchmark::State& state) {
  const auto clip = synth_eating(1, 4.0);
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(clip));
}
BENCHMARK(BM_ExtractFeatures);

void BM_StftLogmag(benchmark::State& state) {
  std::vector<double> seg(kWindowSamples);
  for (std::size_t i = 0; i < seg.size(); ++i) seg[i] = std::sin(0.37 * static_cast<double>(i));
  for (auto _ : state) benchmark::DoNotOptimize(stft_logmag(seg));
}
BENCHMARK(BM_StftLogmag);

void BM_FloatForward(benchmark::State& state) {
  const auto m = init_model(1);
  const auto w = sample_window();
  for (auto _ : state) benchmark::DoNotOptimize(forward(w, m));
}
BENCHMARK(BM_FloatForward);

void BM_QForward(benchmark::State& state) {
  const auto qm = quantize_model(init_model(1));
  const auto qx = quantize_features(sample_window());
  for (auto _ : state) benchmark::DoNotOptimize(qforward(qx, qm));
}
BENCHMARK(BM_QForward);

}  // namespace

BENCHMARK_MAIN();
