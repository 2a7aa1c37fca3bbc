#include <benchmark/benchmark.h>

#include <random>

#include "catexpand/expansion.hpp"
#include "catexpand/gauge.hpp"
#include "catexpand/msa.hpp"
#include "catexpand/network.hpp"

namespace {

using namespace catexpand;

NetworkParams bench_net(int features, int categories, int hidden, int classes,
                        Activation act) {
  CategorySpec spec(std::vector<int>(features, categories));
  NetworkParams net = init_network(spec, classes, hidden, act, 42);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int h = 0; h < hidden; ++h) net.b1[h] = u(rng);
  return net;
}

void BM_ClosedFormExpand(benchmark::State& state) {
  NetworkParams net =
      bench_net(static_cast<int>(state.range(0)), 2, 64, 10, Activation::Tanh);
  for (auto _ : state)
    benchmark::DoNotOptimize(closed_form_expand(net, 2, 1));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ClosedFormExpand)->Arg(16)->Arg(64)->Arg(128)->Complexity();

void BM_ProbeExpand(benchmark::State& state) {
  NetworkParams net =
      bench_net(static_cast<int>(state.range(0)), 2, 64, 10, Activation::Tanh);
  LogitEvaluator eval = [&net](const ProbeVector& p) {
    return forward_logits(net, p);
  };
  for (auto _ : state)
    benchmark::DoNotOptimize(
        probe_expand(eval, net.spec, net.class_count, 2, 1));
}
BENCHMARK(BM_ProbeExpand)->Arg(16)->Arg(64);

void BM_IsingGaugeFix(benchmark::State& state) {
  NetworkParams net =
      bench_net(static_cast<int>(state.range(0)), 2, 64, 10, Activation::Tanh);
  ExpansionCoefficients coeffs = closed_form_expand(net, 2, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(ising_gauge_fix(coeffs, 1));
}
BENCHMARK(BM_IsingGaugeFix)->Arg(64)->Arg(128);

void BM_GibbsSweepRate(benchmark::State& state) {
  PlantedPottsModel model;
  model.length = static_cast<int>(state.range(0));
  model.alphabet = 4;
  model.fields = Eigen::MatrixXd::Zero(model.length, 4);
  Eigen::MatrixXd j = 2.0 * Eigen::MatrixXd::Identity(4, 4);
  for (int i = 0; i + 1 < model.length; i += 2)
    model.couplings.push_back({i, i + 1, j});
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(synth_potts_msa(model, 100, 10, 1, seed++));
  state.SetItemsProcessed(state.iterations() * 110 * model.length);
}
BENCHMARK(BM_GibbsSweepRate)->Arg(12)->Arg(48);

void BM_TrainEpoch(benchmark::State& state) {
  CategorySpec spec(std::vector<int>(32, 2));
  LabeledDataset data;
  data.spec = spec;
  data.class_count = 4;
  std::mt19937_64 rng(3);
  for (int m = 0; m < 512; ++m) {
    CategoricalSample x;
    for (int i = 0; i < 32; ++i)
      x.categories.push_back(static_cast<std::uint16_t>(rng() % 2));
    data.samples.push_back(x);
    data.labels.push_back(static_cast<int>(rng() % 4));
    data.weights.push_back(1.0);
  }
  NetworkParams net0 = init_network(spec, 4, 32, Activation::Tanh, 9);
  TrainConfig config;
  config.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(net0, data, config));
  state.SetItemsProcessed(state.iterations() * 512);
}
BENCHMARK(BM_TrainEpoch);

}  // namespace

BENCHMARK_MAIN();
