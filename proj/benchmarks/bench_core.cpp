#include <benchmark/benchmark.h>

#include <vector>

#include "rhe/image.hpp"
#include "rhe/model.hpp"
#include "rhe/random_stream.hpp"
#include "rhe/stats.hpp"

namespace {

rhe::IntensityPatch make_noise_patch(int side, int bit_depth, std::uint64_t seed) {
  rhe::RandomStream rng(seed);
  std::vector<std::uint16_t> pixels(static_cast<std::size_t>(side) * side);
  for (auto& p : pixels) p = static_cast<std::uint16_t>(rng.next_below(1ull << bit_depth));
  return rhe::make_intensity_patch(side, side, bit_depth, std::move(pixels));
}

void BM_HistogramEqualization(benchmark::State& state) {
  const auto patch = make_noise_patch(static_cast<int>(state.range(0)), 16, 11);
  for (auto _ : state) benchmark::DoNotOptimize(rhe::equalize_histogram(patch));
  state.SetItemsProcessed(state.iterations() * patch.pixel_count());
}
BENCHMARK(BM_HistogramEqualization)->Arg(64)->Arg(224);

void BM_ResizeBilinear(benchmark::State& state) {
  const auto patch = rhe::normalize(make_noise_patch(64, 16, 12));
  const int out = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rhe::resize_bilinear(patch, out, out));
}
BENCHMARK(BM_ResizeBilinear)->Arg(64)->Arg(224);

void BM_ForwardBackward(benchmark::State& state) {
  rhe::ModelConfig cfg;
  cfg.input_size = static_cast<int>(state.range(0));
  cfg.init_seed = 9;
  rhe::ModelState model = rhe::init_model(cfg);
  rhe::Tensor batch = rhe::Tensor::zeros({4, 1, cfg.input_size, cfg.input_size});
  rhe::RandomStream rng(13);
  for (auto& v : batch.data) v = rng.next_double();
  const std::vector<int> labels{0, 1, 0, 1};
  const rhe::ClassWeights weights{{1.0, 1.0}};
  for (auto _ : state) {
    rhe::ForwardCache cache;
    const rhe::Tensor logits = rhe::forward(model, batch, &cache);
    const rhe::LossResult loss = rhe::weighted_cross_entropy(logits, labels, weights);
    benchmark::DoNotOptimize(rhe::backward(model, cache, loss.dlogits));
  }
  state.SetItemsProcessed(state.iterations() * batch.shape[0]);
}
BENCHMARK(BM_ForwardBackward)->Arg(32)->Arg(64);

void BM_TwoTailedP(benchmark::State& state) {
  double t = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rhe::two_tailed_p(t, 8.0));
    t = t > 5.0 ? 0.1 : t + 0.1;
  }
}
BENCHMARK(BM_TwoTailedP);

}  // namespace

BENCHMARK_MAIN();
