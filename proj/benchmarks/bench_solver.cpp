#include <benchmark/benchmark.h>

#include "dasfm/experiment.hpp"
#include "dasfm/solver.hpp"

namespace {

using namespace dasfm;

Dataset make_dataset(double duration) {
  RunConfig cfg;
  cfg.seed = 3;
  cfg.duration = duration;
  return simulate_dataset(cfg);
}

// Frame counts: 2 s, 5 s (the reference instance) and 10 s at 30 Hz.
void duration_args(benchmark::internal::Benchmark* b) {
  for (int seconds : {2, 5, 10}) b->Arg(seconds);
}

void BM_Reconstruct(benchmark::State& state) {
  const Dataset d = make_dataset(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solver::reconstruct(d.measurements));
  state.counters["frames"] = d.measurements.frames();
}
BENCHMARK(BM_Reconstruct)->Apply(duration_args)->Unit(benchmark::kMillisecond);

void BM_FactorRank4(benchmark::State& state) {
  const Dataset d = make_dataset(static_cast<double>(state.range(0)));
  const Eigen::MatrixXd W = solver::assemble_W(d.measurements);
  const Eigen::VectorXd rows = solver::order_weights({}, d.measurements.t_s).rows(d.measurements.frames());
  for (auto _ : state) benchmark::DoNotOptimize(solver::factor_rank4(W, rows));
}
BENCHMARK(BM_FactorRank4)->Apply(duration_args)->Unit(benchmark::kMillisecond);

void BM_RecoverTranslations(benchmark::State& state) {
  const Dataset d = make_dataset(static_cast<double>(state.range(0)));
  const solver::Reconstruction r = solver::reconstruct(d.measurements);
  const auto& m = d.measurements;
  const solver::SolverOptions opts;
  const Series3 omega_dot = omega_dot_series(m.gyro, deriv::EulerOmegaDot{*m.inertia, m.torque}, m.t_s);
  const solver::TranslationProblem p{r.m_hat,      r.rotations, m.gyro, omega_dot, m.accel, m.t_s,
                                     opts.lambda_tau, opts.lambda_nu, opts.reg_filter,
                                     solver::order_weights(opts, m.t_s)};
  for (auto _ : state) benchmark::DoNotOptimize(solver::recover_translations(p));
}
BENCHMARK(BM_RecoverTranslations)->Apply(duration_args)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  RunConfig cfg;
  cfg.duration = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_dataset(cfg));
}
BENCHMARK(BM_Simulate)->Apply(duration_args)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
