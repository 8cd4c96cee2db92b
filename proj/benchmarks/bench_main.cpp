#include <benchmark/benchmark.h>

#include "phasornet/network.hpp"
#include "phasornet/temporal.hpp"

using namespace phasornet;

namespace {

Model mnist_shape(std::uint64_t seed) {
  return init_model({{784, 100, 10}, ProjectionKind::kNrp, 1.0, 0.25}, seed);
}

Eigen::MatrixXd random_phases(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

static void BM_ForwardBatch(benchmark::State& state) {
  const Model m = mnist_shape(1);
  const auto x = random_phases(784, state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(forward_batch(m, x, Mode::kEval));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBatch)->Arg(1)->Arg(128);

static void BM_TrainStep(benchmark::State& state) {
  const Model m = mnist_shape(1);
  const auto x = random_phases(784, 128, 3);
  std::vector<std::size_t> labels(128);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 10;
  const Eigen::MatrixXd targets = target_batch(labels, 10);
  Rng rng(4);
  for (auto _ : state) {
    const auto trace = forward_batch(m, x, Mode::kTrain, &rng);
    benchmark::DoNotOptimize(backward(m, trace, targets));
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_TrainStep);

static void BM_SimulateLayer(benchmark::State& state) {
  RFParams p;
  p.steps_per_cycle = static_cast<std::size_t>(state.range(0));
  const Model m = mnist_shape(5);
  const Eigen::MatrixXd x = random_phases(784, 1, 6);
  const SpikeTrain input = encode_phases(std::span<const double>(x.data(), 784), p);
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_layer(m.layers[0].weights, input, p));
  }
}
BENCHMARK(BM_SimulateLayer)->Arg(40)->Arg(160)->Unit(benchmark::kMillisecond);

static void BM_SimulateNetwork(benchmark::State& state) {
  const Model m = mnist_shape(7);
  Rng rng(8);
  std::vector<double> image(784);
  for (auto& v : image) v = rng.uniform();
  const RFParams p;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_network(m, image, p));
}
BENCHMARK(BM_SimulateNetwork)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
