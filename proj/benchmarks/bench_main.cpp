#include <benchmark/benchmark.h>

#include <random>

#include "wordspot/arch/builders.hpp"
#include "wordspot/arch/network.hpp"
#include "wordspot/diff/ops.hpp"
#include "wordspot/phoc.hpp"
#include "wordspot/retrieval/retrieval.hpp"

using namespace wordspot;

namespace {

diff::Array random_array(diff::Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  diff::Array a(std::move(shape));
  for (auto& v : a.storage()) v = u(rng);
  return a;
}

void BM_PhocEncode(benchmark::State& state) {
  const phoc::PhocConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(phoc::encode("washington1756", cfg));
}
BENCHMARK(BM_PhocEncode);

void BM_Conv3x3(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto x = random_array({c, 30, 80}, 1);
  const auto w = random_array({c, c, 3, 3}, 2);
  const auto b = random_array({c}, 3);
  for (auto _ : state) {
    diff::Graph g;
    benchmark::DoNotOptimize(diff::conv2d(g, g.input(x), g.input(w), g.input(b)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c * c * 9 * 30 * 80));
}
BENCHMARK(BM_Conv3x3)->Arg(16)->Arg(64);

void BM_ConvBackward(benchmark::State& state) {
  const auto x = random_array({32, 30, 80}, 1);
  const auto w = random_array({32, 32, 3, 3}, 2);
  const auto b = random_array({32}, 3);
  for (auto _ : state) {
    diff::Array gw({32, 32, 3, 3});
    diff::Graph g;
    const auto y = diff::conv2d(g, g.input(x, true), g.parameter(w, &gw), g.input(b));
    const auto t = diff::tpp(g, y, {1, diff::TppPooling::kAverage});
    g.backward(diff::bce_loss(g, diff::sigmoid(g, t), std::vector<double>(32, 1.0)));
    benchmark::DoNotOptimize(gw);
  }
}
BENCHMARK(BM_ConvBackward);

void BM_LeNetForward(benchmark::State& state) {
  const auto graph = arch::build_phoclenet({});
  const auto params = arch::init_parameters(graph, 1);
  const auto img = random_array({1, 40, 120}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(arch::predict(graph, params, img));
}
BENCHMARK(BM_LeNetForward);

void BM_QbeEvaluation(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  retrieval::DescriptorSet set;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(540);
    for (auto& x : v) x = u(rng);
    set.add({std::to_string(i), "w" + std::to_string(i % (n / 4)), std::move(v)});
  }
  const phoc::PhocConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(retrieval::evaluate(set, retrieval::QueryMode::kQbE, {}, cfg));
  }
}
BENCHMARK(BM_QbeEvaluation)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
