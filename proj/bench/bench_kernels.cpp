#include <vector>

#include <benchmark/benchmark.h>

#include "ppgage/label_distribution.hpp"
#include "ppgage/nn/kernels.hpp"
#include "ppgage/rng.hpp"

namespace {

using namespace ppgage;
namespace k = ppgage::nn::kernels;

struct ConvFixture {
  k::ConvShape shape;
  std::vector<double> x, w, b, y;

  explicit ConvFixture(std::size_t batch) {
    shape = {batch, 32, 50, 32, 7, 1, 3};
    Rng rng(1);
    x.resize(batch * shape.in_channels * shape.in_length);
    w.resize(shape.weight_size());
    b.resize(shape.out_channels);
    for (double& v : x) v = normal(rng, 0, 1);
    for (double& v : w) v = normal(rng, 0, 0.1);
    y.resize(batch * shape.out_channels * shape.out_length());
  }
};

void BM_ConvForwardSerial(benchmark::State& state) {
  ConvFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    k::serial::conv1d_forward(f.shape, f.x, f.w, f.b, f.y);
    benchmark::DoNotOptimize(f.y.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ConvForwardOmp(benchmark::State& state) {
  ConvFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    k::omp::conv1d_forward(f.shape, f.x, f.w, f.b, f.y);
    benchmark::DoNotOptimize(f.y.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ConvBackwardParamsSerial(benchmark::State& state) {
  ConvFixture f(static_cast<std::size_t>(state.range(0)));
  std::vector<double> dw(f.w.size()), db(f.b.size());
  for (auto _ : state) {
    k::serial::conv1d_backward_params(f.shape, f.x, f.y, dw, db);
    benchmark::DoNotOptimize(dw.data());
  }
}

void BM_ConvBackwardParamsOmp(benchmark::State& state) {
  ConvFixture f(static_cast<std::size_t>(state.range(0)));
  std::vector<double> dw(f.w.size()), db(f.b.size());
  for (auto _ : state) {
    k::omp::conv1d_backward_params(f.shape, f.x, f.y, dw, db);
    benchmark::DoNotOptimize(dw.data());
  }
}

std::vector<double> ages(std::size_t n) {
  Rng rng(2);
  std::vector<double> a(n);
  for (double& v : a) v = normal(rng, 58, 8);
  return a;
}

void BM_KdeSerial(benchmark::State& state) {
  const auto labels = ages(static_cast<std::size_t>(state.range(0)));
  const auto grid = integer_grid(21, 111);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_label_density_serial(labels, 0.5, grid));
}

void BM_KdeOmp(benchmark::State& state) {
  const auto labels = ages(static_cast<std::size_t>(state.range(0)));
  const auto grid = integer_grid(21, 111);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_label_density(labels, 0.5, grid));
}

}  // namespace

BENCHMARK(BM_ConvForwardSerial)->Arg(16)->Arg(256);
BENCHMARK(BM_ConvForwardOmp)->Arg(16)->Arg(256);
BENCHMARK(BM_ConvBackwardParamsSerial)->Arg(16)->Arg(256);
BENCHMARK(BM_ConvBackwardParamsOmp)->Arg(16)->Arg(256);
BENCHMARK(BM_KdeSerial)->Arg(1000)->Arg(100000);
BENCHMARK(BM_KdeOmp)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
