#include <benchmark/benchmark.h>

#include <random>

#include "vdp/block_tridiagonal.hpp"
#include "vdp/data.hpp"
#include "vdp/estimator.hpp"
#include "vdp/forecast.hpp"
#include "vdp/search.hpp"

namespace {

vdp::VdpParams coupled(int m) {
  vdp::VdpParams p = vdp::VdpParams::zeros(m);
  p.alpha.col(0).setConstant(1.5);
  p.alpha.col(1).setConstant(1.0);
  for (int i = 0; i + 1 < m; ++i) {
    p.coupling(i, i + 1) = 0.2;
    p.coupling(i + 1, i) = -0.2;
  }
  return p;
}

vdp::State start(int m) {
  return {Eigen::VectorXd::LinSpaced(m, 1.0, -0.5), Eigen::VectorXd::LinSpaced(m, 0.5, 0.2)};
}

vdp::ObservationSet noisy_observations(int m, int n, const vdp::Discretization& d) {
  vdp::ObservationSet z{vdp::simulate(coupled(m), start(m), n, d).x1};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (Eigen::Index i = 0; i < z.values.size(); ++i) z.values.data()[i] += noise(rng);
  return z;
}

}  // namespace

static void BM_Simulate(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const vdp::VdpParams p = coupled(m);
  const vdp::State s0 = start(m);
  for (auto _ : state) {
    benchmark::DoNotOptimize(vdp::simulate(p, s0, 1000, vdp::Discretization{0.1, 1}));
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Simulate)->Arg(1)->Arg(4)->Arg(16);

static void BM_BlockTridiagonalSolve(benchmark::State& state) {
  const int b = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  vdp::BlockTridiagonal t(b, n);
  for (int k = 0; k < n; ++k) {
    t.diag(k) = Eigen::MatrixXd::Identity(b, b) * (4.0 + b);
    if (k + 1 < n) t.lower(k) = Eigen::MatrixXd::NullaryExpr(b, b, [&] { return u(rng); });
  }
  const Eigen::VectorXd rhs = Eigen::VectorXd::Ones(t.dim());
  for (auto _ : state) benchmark::DoNotOptimize(t.solve(rhs));
}
BENCHMARK(BM_BlockTridiagonalSolve)->Args({2, 100})->Args({8, 100})->Args({8, 1000});

static void BM_InnerSolve(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const vdp::Discretization d{0.2, 2};
  const vdp::ObservationSet z = noisy_observations(m, 100, d);
  const vdp::StackedState x0 = vdp::initial_states(z, d.dt);
  const vdp::InnerSettings settings{1000.0, 1e-8, 200};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        vdp::inner_solve(coupled(m), {x0.state(0)}, z, settings, d, x0));
  }
}
BENCHMARK(BM_InnerSolve)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_Fit(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  vdp::PenaltyConfig cfg;
  cfg.disc = vdp::Discretization{0.2, 2};
  const vdp::ObservationSet z = noisy_observations(m, 100, cfg.disc);
  vdp::VdpParams init = vdp::VdpParams::zeros(m);
  init.alpha.col(0).setConstant(1.0);
  init.alpha.col(1).setConstant(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(vdp::fit(z, cfg, init));
}
BENCHMARK(BM_Fit)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_SearchAndRefine(benchmark::State& state) {
  vdp::PenaltyConfig cfg;
  cfg.disc = vdp::Discretization{0.2, 2};
  const vdp::ObservationSet z = noisy_observations(2, 100, cfg.disc);
  vdp::SearchConfig sc;
  sc.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(vdp::search_and_refine(z, sc, cfg));
}
BENCHMARK(BM_SearchAndRefine)->Unit(benchmark::kSecond)->Iterations(1);

static void BM_Connectivity(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::MatrixXd spatial = Eigen::MatrixXd::NullaryExpr(8, p, [&] { return u(rng); });
  const Eigen::MatrixXd w = Eigen::MatrixXd::NullaryExpr(8, 8, [&] { return u(rng); });
  const Eigen::VectorXd sigma = Eigen::VectorXd::LinSpaced(8, 8.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(vdp::connectivity_projection(spatial, sigma, {w}, 200));
  }
}
BENCHMARK(BM_Connectivity)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_VarFit(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01(0.0, 1.0);
  const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(8, 100, [&] { return n01(rng); });
  for (auto _ : state) benchmark::DoNotOptimize(vdp::var_fit(x, 6));
}
BENCHMARK(BM_VarFit);
BENCHMARK_MAIN();
