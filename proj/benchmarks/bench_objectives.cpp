#include <benchmark/benchmark.h>

#include "rmfgp/conditional.hpp"
#include "rmfgp/estimation.hpp"
#include "rmfgp/fit.hpp"
#include "rmfgp/prediction.hpp"
#include "rmfgp/simulation.hpp"

using namespace rmfgp;

namespace {

DgpConfig lattice(int side, int times) {
  DgpConfig cfg;
  cfg.grid_side = side;
  cfg.n_times = times;
  cfg.seed = 3;
  return cfg;
}

void BM_GaussianNll(benchmark::State& state) {
  const DgpConfig cfg = lattice(static_cast<int>(state.range(0)), 15);
  const FidelityDataset d = simulate_mf(cfg).data;
  const ModelParams t = true_params(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_nll(t, d));
  state.SetComplexityN(static_cast<long>(d.n_lf() + d.n_hf()));
}

// Perturbing only HF-side parameters reuses the cached LF factorization.
void BM_EvaluatorHfPerturbation(benchmark::State& state) {
  const DgpConfig cfg = lattice(static_cast<int>(state.range(0)), 15);
  ObjectiveEvaluator ev(simulate_mf(cfg).data);
  ModelParams t = true_params(cfg);
  for (auto _ : state) {
    t.rho += 1e-9;
    benchmark::DoNotOptimize(ev.gaussian_nll(t));
  }
}

void BM_RobustObjective(benchmark::State& state) {
  const DgpConfig cfg = lattice(static_cast<int>(state.range(0)), 15);
  const FidelityDataset d = simulate_mf(cfg).data;
  const ModelParams t = true_params(cfg);
  const HuberConfig hc;
  for (auto _ : state) benchmark::DoNotOptimize(robust_objective(t, d, hc, 1.0));
}

void BM_GlsRho(benchmark::State& state) {
  const DgpConfig cfg = lattice(4, 15);
  const FidelityDataset d = simulate_mf(cfg).data;
  const ModelParams t = true_params(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(gls_rho(d, t));
}

void BM_GaussianFit(benchmark::State& state) {
  const DgpConfig cfg = lattice(4, 15);
  const FidelityDataset d = simulate_mf(cfg).data;
  const ModelParams t = true_params(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(fit(d, t, FitOptions{}).objective);
}

void BM_Predict(benchmark::State& state) {
  const DgpConfig cfg = lattice(4, 15);
  const FidelityDataset d = simulate_mf(cfg).data;
  const ModelParams t = true_params(cfg);
  const std::vector<SpaceTimePoint> q(static_cast<std::size_t>(state.range(0)), SpaceTimePoint{1.5, 1.5, 0.5});
  for (auto _ : state) benchmark::DoNotOptimize(predict_hf(d, t, q).mean);
}

}  // namespace

BENCHMARK(BM_GaussianNll)->Arg(3)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluatorHfPerturbation)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RobustObjective)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GlsRho)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GaussianFit)->Unit(benchmark::kMillisecond)->Iterations(2);
BENCHMARK(BM_Predict)->Arg(1)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
