#include <benchmark/benchmark.h>

#include "enot/data/samplers.hpp"
#include "enot/metrics/metrics.hpp"
#include "enot/nn/mlp.hpp"
#include "enot/optim/adam.hpp"
#include "enot/oracles/oracles.hpp"
#include "enot/ot/trainer.hpp"

using namespace enot;

namespace {

// Args: dim, batch, map mode (0 residual, 1 potential gradient).
void BM_TrainStep(benchmark::State& st) {
  const int d = static_cast<int>(st.range(0)), n = static_cast<int>(st.range(1));
  ot::EnotConfig c;
  if (st.range(2)) {
    c.map_parametrization = ot::MapParametrization::potential_gradient;
    c.f_arch.activation = ad::Activation::smooth_elu;
  }
  const auto task = data::make_gaussian_task(d, 1);
  ot::TrainState s = ot::init_state(c, d);
  std::int64_t t = 0;
  for (auto _ : st) {
    st.PauseTiming();
    const Matrix x = task.source.sample(n, ot::batch_stream(0, t, 0));
    const Matrix y = task.target.sample(n, ot::batch_stream(0, t, 1));
    ++t;
    st.ResumeTiming();
    benchmark::DoNotOptimize(ot::train_step(s, x, y, c));
    if (s.step >= c.train_steps) s.step = 0;
  }
  st.SetItemsProcessed(st.iterations() * n);
}
BENCHMARK(BM_TrainStep)->Args({2, 1024, 0})->Args({2, 1024, 1})->Args({8, 1024, 0})->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto net = nn::init({{128, 128, 128}, ad::Activation::elu, 1}, 4, 1);
  const Matrix x = data::MeasureSampler::gaussian(Vector::Zero(4), Matrix::Identity(4, 4), 2).sample(n);
  for (auto _ : st) benchmark::DoNotOptimize(nn::evaluate(net, x));
  st.SetItemsProcessed(st.iterations() * n);
}
BENCHMARK(BM_Forward)->Arg(1024)->Arg(10000);

void BM_InputGradient(benchmark::State& st) {
  const auto net = nn::init({{128, 128, 128}, ad::Activation::smooth_elu, 1}, 4, 1);
  const Matrix x = data::MeasureSampler::gaussian(Vector::Zero(4), Matrix::Identity(4, 4), 2).sample(1024);
  for (auto _ : st) benchmark::DoNotOptimize(nn::input_gradient(net, x));
}
BENCHMARK(BM_InputGradient);

void BM_AdamStep(benchmark::State& st) {
  const Eigen::Index n = st.range(0);
  Vector p = Vector::Zero(n), g = Vector::Constant(n, 0.1);
  auto s = optim::AdamState::zeros(n, 0.9, 0.999);
  for (auto _ : st) optim::adam_step(s, p, g, 1e-4);
}
BENCHMARK(BM_AdamStep)->Arg(33537);

void BM_Sinkhorn(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto task = data::make_gaussian_task(2, 3);
  const Matrix x = task.source.sample(n, 1), y = task.target.sample(n, 2);
  const ot::CostFunction c;
  const double eps = metrics::default_divergence_epsilon(y, c);
  for (auto _ : st) benchmark::DoNotOptimize(metrics::sinkhorn_divergence(x, y, c, eps));
}
BENCHMARK(BM_Sinkhorn)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
