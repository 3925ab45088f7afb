#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <vector>

#include "soilwave/harness.hpp"
#include "soilwave/lstm.hpp"
#include "soilwave/preprocess.hpp"
#include "soilwave/rng.hpp"
#include "soilwave/simulator.hpp"
#include "soilwave/svr.hpp"

namespace lstm = soilwave::lstm;
namespace prep = soilwave::preprocess;
namespace sim = soilwave::sim;
namespace svr = soilwave::svr;
using soilwave::rng::SplitMix64;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  SplitMix64 gen(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = gen.next_double();
  }
  return m;
}

void BM_RbfKernel(benchmark::State& state) {
  auto d = state.range(0);
  Eigen::VectorXd x = random_matrix(d, 1, 1);
  Eigen::VectorXd y = random_matrix(d, 1, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(svr::rbf_kernel(x, y, 1.0));
  }
}
BENCHMARK(BM_RbfKernel)->Arg(4)->Arg(16)->Arg(64);

void BM_SimulateDay(benchmark::State& state) {
  sim::SimConfig cfg = sim::default_sim_config();
  cfg.seed = 42;
  auto humidity = sim::simulate_humidity(cfg.humidity, 288, cfg.sample_period, cfg.seed);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::simulate_uplinks(humidity, cfg));
  }
}
BENCHMARK(BM_SimulateDay)->Unit(benchmark::kMicrosecond);

void BM_DecomposeFading(benchmark::State& state) {
  SplitMix64 gen(3);
  std::vector<double> raw(static_cast<std::size_t>(state.range(0)));
  for (auto& v : raw) v = gen.next_normal(-95.0, 2.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(prep::decompose_fading(raw, 24));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DecomposeFading)->Range(1 << 10, 1 << 14)->Complexity();

void BM_Pearson(benchmark::State& state) {
  SplitMix64 gen(4);
  std::vector<double> x(static_cast<std::size_t>(state.range(0))), y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = gen.next_normal(0.0, 1.0);
    y[i] = 0.5 * x[i] + gen.next_normal(0.0, 1.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(prep::pearson(x, y));
  }
}
BENCHMARK(BM_Pearson)->Arg(1 << 12)->Arg(1 << 16);

void BM_LstmCellForward(benchmark::State& state) {
  auto u = state.range(0);
  SplitMix64 gen(5);
  lstm::ModelSpec spec;
  spec.input_width = 4;
  spec.layer1_units = u;
  spec.layer2_units = u;
  auto model = lstm::init_model(spec, gen);
  Eigen::VectorXd x = random_matrix(4, 1, 6);
  auto prev = lstm::LstmState::zero(u);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lstm::lstm_cell_forward(model.layer1, x, prev));
  }
}
BENCHMARK(BM_LstmCellForward)->Arg(16)->Arg(32)->Arg(64);

void BM_LstmWindowForwardBackward(benchmark::State& state) {
  SplitMix64 gen(7);
  lstm::ModelSpec spec;
  spec.input_width = 4;
  spec.layer1_units = 32;
  spec.layer2_units = 32;
  spec.dropout_p = 0.2;
  auto model = lstm::init_model(spec, gen);
  Eigen::MatrixXd window = random_matrix(18, 4, 8);
  for (auto _ : state) {
    lstm::ForwardCache cache;
    double pred = lstm::lstm_forward(model, window, lstm::Mode::kTrain, gen, &cache);
    auto grads = lstm::lstm_backward(model, cache, pred);
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_LstmWindowForwardBackward)->Unit(benchmark::kMicrosecond);

void BM_SvrTrain(benchmark::State& state) {
  auto n = state.range(0);
  SplitMix64 gen(9);
  Eigen::MatrixXd x = random_matrix(n, 4, 10);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = x.row(i).mean() + gen.next_normal(0.0, 0.05);
  for (auto _ : state) {
    benchmark::DoNotOptimize(svr::svr_train(x, y, {0.1, 0.1, 1.0}, 1e-3, 1000, 1));
  }
}
BENCHMARK(BM_SvrTrain)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
