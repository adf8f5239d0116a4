#include <benchmark/benchmark.h>

#include "betashrink/asymptotics.hpp"
#include "betashrink/simulation.hpp"
#include "betashrink/special_functions.hpp"

using namespace betashrink;

namespace {

BetaFit make_fit(int n, int p, double rho) {
  Rng rng(1u);
  const MatrixXd X = sim::gen_design(n, p, rho, rng);
  VectorXd beta = VectorXd::Zero(p);
  beta[0] = 1.0;
  beta[1] = -0.6;
  beta[2] = 0.5;
  const VectorXd y = sim::gen_response(X, beta, 5.0, rng);
  return fit_mle(Dataset(y, X));
}

void BM_NoncentralCdf(benchmark::State& state) {
  const special::NoncentralChi2 d(7, static_cast<double>(state.range(0)));
  double x = 0.0;
  for (auto _ : state) {
    x += 0.1;
    benchmark::DoNotOptimize(special::noncentral_chi2_cdf(d, 5.0 + x));
    if (x > 20.0) x = 0.0;
  }
}
BENCHMARK(BM_NoncentralCdf)->Arg(0)->Arg(10)->Arg(100);

void BM_SteinMoments(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(
        special::stein_factor_moments(5, static_cast<double>(state.range(0))));
}
BENCHMARK(BM_SteinMoments)->Arg(0)->Arg(5)->Arg(50);

void BM_FitMle(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(2u);
  const MatrixXd X = sim::gen_design(n, 6, 0.5, rng);
  VectorXd beta = VectorXd::Zero(6);
  beta[0] = 1.0;
  beta[1] = -0.6;
  beta[2] = 0.5;
  const VectorXd y = sim::gen_response(X, beta, 5.0, rng);
  const Dataset d(y, X);
  for (auto _ : state) benchmark::DoNotOptimize(fit_mle(d));
}
BENCHMARK(BM_FitMle)->Arg(100)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_EstimatorSet(benchmark::State& state) {
  const BetaFit fit = make_fit(400, 8, 0.7);
  const Restriction r = Restriction::zero_block(8, {4, 5, 6, 7});
  EstimatorOptions opts;
  opts.fixed_delta = 0.5;
  for (auto _ : state)
    benchmark::DoNotOptimize(build_estimator_set(fit, r, opts));
}
BENCHMARK(BM_EstimatorSet);

void BM_SweepCell(benchmark::State& state) {
  sim::SimConfig cfg;
  cfg.n = 100;
  cfg.p1 = 3;
  cfg.p2 = 10;
  cfg.rho = 0.9;
  cfg.delta_grid = {0.0};
  cfg.reps = static_cast<int>(state.range(0));
  cfg.seed = 9u;
  cfg.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sim::run_sweep(cfg));
}
BENCHMARK(BM_SweepCell)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
