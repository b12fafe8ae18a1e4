#include <benchmark/benchmark.h>

#include "leap/escape.hpp"
#include "leap/landscapes.hpp"
#include "leap/models.hpp"
#include "leap/optimizers.hpp"
#include "leap/perturbation.hpp"

namespace {

void BM_SampleLrVector(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  leap::RngStream rng(1, 0);
  std::vector<double> h(m);
  for (auto _ : state) {
    leap::sample_lr_vector_into(0.1, {0.05, true}, rng, h);
    benchmark::DoNotOptimize(h.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleLrVector)->Arg(1 << 10)->Arg(79510);

void BM_LeapSgdStep(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  std::vector<double> theta(m, 0.5);
  std::vector<double> grad(m, 1e-3);
  leap::OptimizerConfig cfg;
  auto opt_state = leap::OptimizerState::zeros(m);
  leap::LeapScratch scratch;
  leap::RngStream rng(2, 0);
  for (auto _ : state) {
    leap::leap_step(theta, grad, 0.1, {0.01, true}, opt_state, cfg, rng, scratch);
    benchmark::DoNotOptimize(theta.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LeapSgdStep)->Arg(79510);

void BM_Mlp3LossAndGradient(benchmark::State& state) {
  const auto spec = leap::mlp_preset("mlp3");
  leap::RngStream rng(3, 0);
  const auto theta = leap::init_params(spec, rng);
  const auto rows = state.range(0);
  leap::RowMatrix x = leap::RowMatrix::Random(rows, spec.input_dim()).cwiseAbs();
  std::vector<int> y(static_cast<std::size_t>(rows));
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 10);
  for (auto _ : state) benchmark::DoNotOptimize(leap::loss_and_gradient(spec, theta, x, y));
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_Mlp3LossAndGradient)->Arg(128);

void BM_QuarticEscapeTrial(benchmark::State& state) {
  const auto land = leap::quartic_double_well({});
  const leap::EscapeDynamics dyn{0.05, {1.0, true}, leap::GradientNoise::Fisher};
  std::uint64_t trial = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(leap::run_escape_trial(*land.landscape, land.catalog[0], dyn, 1'000'000, 7, trial++));
}
BENCHMARK(BM_QuarticEscapeTrial);

}  // namespace
BENCHMARK_MAIN();
