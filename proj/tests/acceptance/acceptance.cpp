// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "cli_fixture.hpp"
#include "oracles.hpp"
#include "vdp/constraint.hpp"
#include "vdp/data.hpp"
#include "vdp/estimator.hpp"
#include "vdp/forecast.hpp"
#include "vdp/search.hpp"
#include "vdp/stats.hpp"

using namespace vdp;
namespace vt = vdp::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

// --- 1: Jacobians ---------------------------------------------------------

Outcome jacobian_check() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> pick_m(1, 3), pick_n(2, 10), pick_sub(1, 3);
  std::uniform_real_distribution<double> pick_dt(0.01, 0.2);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = pick_m(rng), n = pick_n(rng);
    const Discretization d{pick_dt(rng), pick_sub(rng)};
    const VdpParams p = vt::random_params(rng, m, -1.5, 1.5);
    const State s = vt::random_state(rng, m, -1.5, 1.5);

    // Per-sample transition map.
    const StepJacobians J = jacobians(p, s, d);
    auto g_of_x = [&](const Eigen::VectorXd& v) {
      return transition(p, State::from_interleaved(v), d).interleaved();
    };
    auto g_of_p = [&](const Eigen::VectorXd& v) {
      return transition(VdpParams::unflatten(v, m), s, d).interleaved();
    };
    const Eigen::MatrixXd fd_p = vt::fd_jacobian(g_of_p, p.flatten());
    worst = std::max(worst, vt::max_rel_error(J.state, vt::fd_jacobian(g_of_x, s.interleaved())));
    worst = std::max(worst, vt::max_rel_error(J.alpha, fd_p.leftCols(2 * m)));
    worst = std::max(worst, vt::max_rel_error(J.coupling, fd_p.rightCols(m * m)));

    // Stacked constraint.
    const StackedState x(vt::uniform_matrix(rng, 2 * m * n, 1, -1.5, 1.5), m, n);
    const InitAnchor a{vt::random_state(rng, m)};
    auto G_of_x = [&](const Eigen::VectorXd& v) {
      return residual(StackedState(v, m, n), p, a, d);
    };
    auto G_of_p = [&](const Eigen::VectorXd& v) {
      return residual(x, VdpParams::unflatten(v, m), a, d);
    };
    worst = std::max(worst, vt::max_rel_error(residual_jacobian_x(x, p, d).to_dense(),
                                              vt::fd_jacobian(G_of_x, x.flat())));
    worst = std::max(worst, vt::max_rel_error(residual_jacobian_params(x, p, d).to_dense(),
                                              vt::fd_jacobian(G_of_p, p.flatten())));
  }
  return {worst < 1e-6, "max relative error " + fmt(worst) + " over 100 instances"};
}

// --- 2: linear oracle -----------------------------------------------------

Outcome linear_oracle() {
  std::mt19937_64 rng(102);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2, n = 10;
    VdpParams p = vt::random_params(rng, m, -1, 1);
    p.alpha.col(0).setZero();
    const Discretization d{0.1, 1 + trial % 2};
    const Eigen::MatrixXd z = vt::uniform_matrix(rng, n, m, -1, 1);
    const Eigen::VectorXd anchor = vt::uniform_matrix(rng, 2 * m, 1, -1, 1);
    const double lambda = std::pow(10.0, 1 + trial % 3);
    const Eigen::VectorXd oracle = vt::dense_linear_oracle(p, d, z, anchor, lambda);
    const InnerResult r = inner_solve(p, {State::from_interleaved(anchor)}, ObservationSet{z},
                                      {lambda, 1e-10, 50}, d, StackedState(m, n));
    worst = std::max(worst, (r.x.flat() - oracle).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-8, "max deviation from dense solve " + fmt(worst)};
}

// --- 3: value gradient ----------------------------------------------------

Outcome value_gradient_check() {
  const int m = 2, n = 20;
  const Discretization d{0.1, 1};
  VdpParams truth = VdpParams::zeros(m);
  truth.alpha << 1.2, 1.0, 0.8, 1.3;
  truth.coupling << 0, 0.3, -0.3, 0;
  const State s0(Eigen::Vector2d(1.0, -0.5), Eigen::Vector2d(0.3, 0.2));
  const ObservationSet z{vt::add_noise(simulate(truth, s0, n, d).x1, 0.05, 103)};
  const StackedState x0 = initial_states(z, d.dt);
  const InitAnchor a{x0.state(0)};

  double worst = 0.0;
  std::mt19937_64 rng(103);
  for (double lambda : {10.0, 100.0, 1000.0}) {
    const InnerSettings settings{lambda, 1e-10, 1000};
    const Eigen::VectorXd p0 =
        truth.flatten() + vt::uniform_matrix(rng, truth.flatten().size(), 1, -0.2, 0.2);
    const VdpParams at = VdpParams::unflatten(p0, m);
    const ValueGradient vg = value_gradient(at, a, z, settings, d, x0);
    if (!vg.accurate) return {false, "inner solve did not reach 1e-10 at lambda " + fmt(lambda)};
    const double h = 1e-4;
    Eigen::VectorXd fd(p0.size());
    for (Eigen::Index j = 0; j < p0.size(); ++j) {
      Eigen::VectorXd pp = p0, pm = p0;
      pp(j) += h;
      pm(j) -= h;
      fd(j) = (value_gradient(VdpParams::unflatten(pp, m), a, z, settings, d, vg.inner.x).value -
               value_gradient(VdpParams::unflatten(pm, m), a, z, settings, d, vg.inner.x).value) /
              (2 * h);
    }
    worst = std::max(worst, (vg.gradient - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff());
  }
  return {worst < 1e-3, "max relative gradient error " + fmt(worst) + " over 3 penalty weights"};
}

// --- 4: single-component recovery ----------------------------------------

Outcome single_component_recovery() {
  VdpParams truth = VdpParams::zeros(1);
  truth.alpha << 1.5, 1.0;
  const Discretization d{0.1, 1};
  const Trajectory clean = simulate(truth, State(Eigen::VectorXd::Constant(1, 1.0),
                                                 Eigen::VectorXd::Constant(1, 0.5)),
                                    100, d);
  const ObservationSet z{vt::add_noise(clean.x1, 0.02, 104)};
  PenaltyConfig pc;
  pc.disc = d;
  SearchConfig sc;
  sc.seed = 104;
  const SearchOutcome out = search_and_refine(z, sc, pc);
  const auto r1 = stats::pearson(out.fit.states.x1.col(0), clean.x1.col(0));
  const auto r2 = stats::pearson(out.fit.states.x2.col(0), clean.x2.col(0));
  const double c1 = r1.value_or(-2), c2 = r2.value_or(-2);
  return {c1 >= 0.95 && c2 >= 0.8,
          "x1 pearson " + fmt(c1) + ", x2 pearson " + fmt(c2) + ", alpha (" +
              fmt(out.fit.params.alpha(0, 0)) + ", " + fmt(out.fit.params.alpha(0, 1)) + ")"};
}

// --- 5: coupled recovery --------------------------------------------------

Outcome coupled_recovery() {
  VdpParams truth = VdpParams::zeros(2);
  truth.alpha << 1.5, 1.0, 1.5, 1.0;
  truth.coupling << 0, 0.3, -0.3, 0;
  // dt 0.2 covers about three cycles in 100 samples.
  const Discretization d{0.2, 2};
  const Trajectory clean =
      simulate(truth, State(Eigen::Vector2d(1.0, -0.5), Eigen::Vector2d(0.5, 0.2)), 100, d);
  const ObservationSet z{vt::add_noise(clean.x1, 0.05, 1)};
  PenaltyConfig pc;
  pc.disc = d;
  SearchConfig sc;
  sc.seed = 1;
  const SearchOutcome out = search_and_refine(z, sc, pc);
  const Eigen::MatrixXd& w = out.fit.params.coupling;
  const bool signs = w(0, 1) > 0.0 && w(1, 0) < 0.0;
  const double p0 = out.fit.stats[0].pearson, p1 = out.fit.stats[1].pearson;
  bool monotone = true;
  for (std::size_t i = 1; i < out.best_fitness.size(); ++i) {
    if (out.best_fitness[i] < out.best_fitness[i - 1]) monotone = false;
  }
  return {signs && p0 >= 0.8 && p1 >= 0.8 && monotone,
          "W12 " + fmt(w(0, 1)) + ", W21 " + fmt(w(1, 0)) + ", pearson (" + fmt(p0) + ", " +
              fmt(p1) + "), best fitness " + (monotone ? "nondecreasing" : "DECREASED") +
              " over " + std::to_string(out.rounds) + " rounds"};
}

// --- 6: forecast ordering -------------------------------------------------

Outcome forecast_ordering() {
  VdpParams truth = VdpParams::zeros(1);
  truth.alpha << 2.0, 1.0;
  const Discretization d{0.25, 5};
  // 40 pooled windows keep the h = 1 comparison above sampling noise.
  const int segments = 40, T = segments * 120;
  const Trajectory clean = simulate(truth, State(Eigen::VectorXd::Constant(1, 1.0),
                                                 Eigen::VectorXd::Constant(1, 0.5)),
                                    T, d);
  const Eigen::MatrixXd series = vt::add_noise(clean.x1, 0.05, 1).transpose();
  const SegmentSplit split = split_segments(T, 100, 20, segments);

  PenaltyConfig pc;
  pc.disc = d;
  VdpParams init = VdpParams::zeros(1);
  init.alpha << 1.0, 0.5;
  std::vector<FitResult> fits;
  for (const auto& seg : split.segments) {
    const ObservationSet z{series.middleCols(seg.train.begin, seg.train.size()).transpose()};
    fits.push_back(fit(z, pc, init));
  }
  VdpForecaster vdpf(std::move(fits));
  VarForecaster var(6);
  const ForecastReport rep = evaluate({&vdpf, &var}, split, series);
  const MethodReport* a = rep.find("vdp");
  const MethodReport* b = rep.find("var");
  bool ok = true;
  std::string worst;
  double margin = 1e9;
  for (int h = 0; h < 9; ++h) {
    const double cv = a->horizons[h].median_corr.value_or(-2);
    const double cr = b->horizons[h].median_corr.value_or(-2);
    if (!(cv > cr)) ok = false;
    if (cv - cr < margin) {
      margin = cv - cr;
      worst = "h=" + std::to_string(h + 1) + " vdp " + fmt(cv) + " vs var " + fmt(cr);
    }
  }
  return {ok, "smallest margin at " + worst};
}

// --- 7: protocol constants ------------------------------------------------

Outcome protocol_constants() {
  std::mt19937_64 rng(107);
  const Eigen::MatrixXd zebra = vt::uniform_matrix(rng, 3, 600, -1, 1);
  const SegmentSplit zs = split_segments(600, 100, 20, 5);
  bool ok = zs.segments.size() == 5;
  for (int s = 0; s < 5 && ok; ++s) {
    const Segment& seg = zs.segments[static_cast<std::size_t>(s)];
    ok = seg.train.begin == 120 * s && seg.train.size() == 100 && seg.test.size() == 20;
  }
  OracleForecaster oracle;
  VarForecaster var(6);
  const EvaluationOptions longterm{9, Protocol::LongTerm, 1};
  const ForecastReport zl = evaluate({&oracle, &var}, zs, zebra, longterm);
  const ForecastReport zshort = evaluate({&oracle}, zs, zebra);
  int per_segment = 0;
  for (const auto& seg : zs.segments) {
    per_segment = static_cast<int>(window_starts(seg, longterm).size());
    ok = ok && per_segment == 12;
  }
  ok = ok && zl.find("oracle")->windows == 60 && zl.find("var")->windows == 60 &&
       zshort.find("oracle")->windows == 5 && zl.horizon == 9;

  const Eigen::MatrixXd rat = vt::uniform_matrix(rng, 3, 276, -1, 1);
  const SegmentSplit rs = split_segments(276, 100, 176, 1);
  const ForecastReport rl = evaluate({&var}, rs, rat, longterm);
  const int rat_windows = rl.find("var")->windows;
  ok = ok && rs.segments[0].train.size() == 100 && rs.segments[0].test.size() == 176 &&
       rat_windows == 168;
  return {ok, "zebrafish " + std::to_string(per_segment) + " windows/segment, rat " +
                  std::to_string(rat_windows) + " windows"};
}

// --- 8: VAR exactness -----------------------------------------------------

Outcome var_exactness() {
  // Lightly damped rotation so the noiseless trajectory keeps exciting
  // every direction of the lag space.
  const double th = 0.7, r = 0.95;
  Eigen::Matrix2d a1, a2;
  a1 << r * std::cos(th), -r * std::sin(th), r * std::sin(th), r * std::cos(th);
  a2 << 0.05, 0.02, -0.03, 0.04;
  const Eigen::Vector2d c(0.2, -0.1);
  std::mt19937_64 rng(108);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd x(2, 60);
    x.leftCols(2) = vt::uniform_matrix(rng, 2, 2, -1, 1);
    for (int t = 2; t < 60; ++t) x.col(t) = c + a1 * x.col(t - 1) + a2 * x.col(t - 2);
    const VarModel model = var_fit(x, 2);
    worst = std::max({worst, (model.lags[0] - a1).cwiseAbs().maxCoeff(),
                      (model.lags[1] - a2).cwiseAbs().maxCoeff(),
                      (model.intercept - c).cwiseAbs().maxCoeff()});
  }
  return {worst < 1e-8, "max coefficient error " + fmt(worst) + " over 10 series"};
}

// --- 9: connectivity ------------------------------------------------------

Outcome connectivity_oracle() {
  std::mt19937_64 rng(109);
  std::uniform_int_distribution<int> pick_p(1, 10), pick_m(1, 4), pick_models(1, 3), pick_k(1, 120);
  int mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int P = pick_p(rng), m = pick_m(rng), k = pick_k(rng);
    const Eigen::MatrixXd spatial = vt::uniform_matrix(rng, m, P, -1, 1);
    const Eigen::VectorXd sigma = vt::uniform_matrix(rng, m, 1, 0.1, 5);
    std::vector<Eigen::MatrixXd> ws;
    for (int i = pick_models(rng); i > 0; --i) ws.push_back(vt::uniform_matrix(rng, m, m, -1, 1));
    const Eigen::MatrixXd c = vt::brute_force_connectivity(spatial, sigma, ws);
    const EdgeList e = connectivity_projection(spatial, sigma, ws, k);
    if (!vt::same_edges(e.excitatory, vt::brute_force_top(c, k, +1)) ||
        !vt::same_edges(e.inhibitory, vt::brute_force_top(c, k, -1))) {
      ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(mismatches) + " of 50 instances differ"};
}

// --- 10: determinism ------------------------------------------------------

Outcome determinism() {
  vt::TempDir dir("vdpaccept");
  vt::write_recording(dir / "rec.csv", 10, 600, 110);
  vdp::write_json(dir / "cfg.json", vdpcli::config_to_json(vt::quick_config()));
  auto must = [](const std::vector<std::string>& args) {
    const vt::CliResult r = vt::run_cli(args);
    if (r.code != 0) throw std::runtime_error("vdpfit exited " + std::to_string(r.code) + ": " + r.err);
  };
  const std::string comps = (dir / "comps").string(), cfg = (dir / "cfg.json").string();
  must({"svd", (dir / "rec.csv").string(), "-m", "2", "--out", comps});
  for (const char* tag : {"a", "b"}) {
    const std::string t = tag;
    must({"fit", comps, "--config", cfg, "--segment", "0", "--seed", "7", "--out",
          (dir / ("fit_" + t + ".json")).string()});
  }
  const std::string fit_a = vt::read_file(dir / "fit_a.json");
  const bool fits_equal = !fit_a.empty() && fit_a == vt::read_file(dir / "fit_b.json");
  for (const char* tag : {"a", "b"}) {
    const std::string t = tag;
    must({"export-sim", "--fit", (dir / "fit_a.json").string(), "--config", cfg, "--n", "20",
          "--len", "110", "--seed", "3", "--out", (dir / ("corpus_" + t)).string()});
  }
  const auto ca = vt::snapshot(dir / "corpus_a");
  const bool corpora_equal = ca.size() > 2 && ca == vt::snapshot(dir / "corpus_b");
  return {fits_equal && corpora_equal,
          std::string("fit JSON ") + (fits_equal ? "identical" : "DIFFERS") + ", corpus (" +
              std::to_string(ca.size()) + " files) " + (corpora_equal ? "identical" : "DIFFERS")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "Jacobians match finite differences", 10, jacobian_check},
      {2, "linear case matches dense least squares", 5, linear_oracle},
      {3, "value gradient matches finite differences", 30, value_gradient_check},
      {4, "single-component recovery", 120, single_component_recovery},
      {5, "coupled recovery", 600, coupled_recovery},
      {6, "VDP forecasts beat VAR(6) at every horizon", 300, forecast_ordering},
      {7, "protocol constants", 60, protocol_constants},
      {8, "VAR(2) coefficients recovered exactly", 5, var_exactness},
      {9, "connectivity matches brute force", 10, connectivity_oracle},
      {10, "CLI outputs are byte-identical across runs", 300, determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = seconds_since(t0);
    const bool in_time = elapsed <= c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s criterion %d: %s; %s; %.1f s (budget %.0f s)%s\n", pass ? "PASS" : "FAIL",
                c.id, c.name, o.detail.c_str(), elapsed, c.budget_s,
                in_time ? "" : " over budget");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
