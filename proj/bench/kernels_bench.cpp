// Times the OpenMP kernels against their serial reference versions on the
// shapes the counting network actually runs (64x64 views, stride-4 features).

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "wscf/substrate/kernels.hpp"

namespace {

using wscf::kernels::ConvGeometry;

std::vector<float> random_buffer(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1.f, 1.f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

ConvGeometry geometry(const benchmark::State& state) {
  ConvGeometry g;
  g.batch = 3;
  g.in_channels = static_cast<int>(state.range(0));
  g.out_channels = static_cast<int>(state.range(1));
  g.in_h = g.in_w = static_cast<int>(state.range(2));
  g.kernel = 3;
  g.pad = 1;
  return g;
}

template <bool Reference>
void BM_ConvForward(benchmark::State& state) {
  const ConvGeometry g = geometry(state);
  auto in = random_buffer(static_cast<std::size_t>(g.batch) * g.in_channels * g.in_h * g.in_w, 1);
  auto w = random_buffer(static_cast<std::size_t>(g.out_channels) * g.in_channels * 9, 2);
  auto b = random_buffer(g.out_channels, 3);
  std::vector<float> out(static_cast<std::size_t>(g.batch) * g.out_channels * g.out_h() * g.out_w());
  for (auto _ : state) {
    if constexpr (Reference)
      wscf::kernels::reference::conv2d_forward(g, in.data(), w.data(), b.data(), out.data());
    else
      wscf::kernels::conv2d_forward(g, in.data(), w.data(), b.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["MFLOP/s"] = benchmark::Counter(
      2.0 * g.batch * g.out_channels * g.out_h() * g.out_w() * g.in_channels * 9 / 1e6,
      benchmark::Counter::kIsIterationInvariantRate);
}

template <bool Reference>
void BM_ConvBackward(benchmark::State& state) {
  const ConvGeometry g = geometry(state);
  auto in = random_buffer(static_cast<std::size_t>(g.batch) * g.in_channels * g.in_h * g.in_w, 1);
  auto w = random_buffer(static_cast<std::size_t>(g.out_channels) * g.in_channels * 9, 2);
  auto go = random_buffer(static_cast<std::size_t>(g.batch) * g.out_channels * g.out_h() * g.out_w(), 4);
  std::vector<float> gi(in.size()), gw(w.size()), gb(g.out_channels);
  for (auto _ : state) {
    if constexpr (Reference) {
      wscf::kernels::reference::conv2d_backward_input(g, go.data(), w.data(), gi.data());
      wscf::kernels::reference::conv2d_backward_weight(g, in.data(), go.data(), gw.data(), gb.data());
    } else {
      wscf::kernels::conv2d_backward_input(g, go.data(), w.data(), gi.data());
      wscf::kernels::conv2d_backward_weight(g, in.data(), go.data(), gw.data(), gb.data());
    }
    benchmark::DoNotOptimize(gi.data());
  }
}

template <bool Reference>
void BM_HomographyWarp(benchmark::State& state) {
  wscf::kernels::WarpGeometry g;
  g.batch = 6;
  g.channels = static_cast<int>(state.range(0));
  g.h = g.w = 16;
  g.stride = 4;
  std::vector<wscf::kernels::Mat3> hs(g.batch, {0.9, 0.1, 0.05, -0.1, 1.1, 0.0, 0.02, 0.01, 1.0});
  auto in = random_buffer(static_cast<std::size_t>(g.batch) * g.channels * 256, 5);
  std::vector<float> out(in.size());
  for (auto _ : state) {
    if constexpr (Reference)
      wscf::kernels::reference::homography_warp_forward(g, hs.data(), in.data(), out.data());
    else
      wscf::kernels::homography_warp_forward(g, hs.data(), in.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Reference>
void BM_Correlation(benchmark::State& state) {
  wscf::kernels::CorrelationGeometry g;
  g.batch = 6;
  g.channels = static_cast<int>(state.range(0));
  g.h = g.w = 16;
  g.ph = g.pw = 8;
  auto a = random_buffer(static_cast<std::size_t>(g.batch) * g.channels * 256, 6);
  auto b = random_buffer(static_cast<std::size_t>(g.batch) * g.channels * 64, 7);
  std::vector<float> out(static_cast<std::size_t>(g.batch) * 64 * 256);
  for (auto _ : state) {
    if constexpr (Reference)
      wscf::kernels::reference::cosine_correlation_forward(g, a.data(), b.data(), out.data());
    else
      wscf::kernels::cosine_correlation_forward(g, a.data(), b.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
}

// {in_channels, out_channels, spatial}
#define CONV_SHAPES ->Args({1, 16, 64})->Args({16, 32, 32})->Args({32, 32, 16})->Args({64, 64, 16})

BENCHMARK(BM_ConvForward<false>) CONV_SHAPES;
BENCHMARK(BM_ConvForward<true>) CONV_SHAPES;
BENCHMARK(BM_ConvBackward<false>) CONV_SHAPES;
BENCHMARK(BM_ConvBackward<true>) CONV_SHAPES;
BENCHMARK(BM_HomographyWarp<false>)->Arg(32);
BENCHMARK(BM_HomographyWarp<true>)->Arg(32);
BENCHMARK(BM_Correlation<false>)->Arg(32);
BENCHMARK(BM_Correlation<true>)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
