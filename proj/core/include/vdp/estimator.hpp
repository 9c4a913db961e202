#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vdp/constraint.hpp"
#include "vdp/model.hpp"

namespace vdp {

/// Observed activity: N x m, row k holds x1 at sample k for every component.
/// The measurement operator selects every x1 entry of the stacked state.
struct ObservationSet {
  Eigen::MatrixXd values;

  int length() const noexcept { return static_cast<int>(values.rows()); }
  int components() const noexcept { return static_cast<int>(values.cols()); }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Box constraints over the flattened parameter vector.
struct ParameterBounds {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static ParameterBounds uniform(int m, Interval alpha1, Interval alpha2,
                                 Interval coupling);
  /// a1 in [0, 5], a2 in [-5, 5], W in [-2, 2].
  static ParameterBounds defaults(int m);
  static ParameterBounds unbounded(int m);

  int size() const noexcept { return static_cast<int>(lo.size()); }
  void validate() const;
  Eigen::VectorXd project(const Eigen::VectorXd& p) const;
  bool contains(const Eigen::VectorXd& p) const;
};

/// Group-level bound description; expands to ParameterBounds once m is known.
struct BoundsSpec {
  Interval alpha1{0.0, 5.0};
  Interval alpha2{-5.0, 5.0};
  Interval coupling{-2.0, 2.0};

  ParameterBounds expand(int m) const {
    return ParameterBounds::uniform(m, alpha1, alpha2, coupling);
  }
};

/// Settings for one inner (state) minimization at a fixed penalty weight.
struct InnerSettings {
  double lambda = 1e3;
  double tol = 1e-8;    // on the max-norm of the state gradient
  int max_iter = 200;
};

struct PenaltyConfig {
  std::vector<double> lambda_schedule{10.0, 100.0, 1000.0};
  double inner_tol_first = 1e-4;
  double inner_tol_last = 1e-8;
  int inner_max_iter_first = 50;
  int inner_max_iter_last = 200;
  double outer_step = 1e-2;
  int outer_max_iter = 100;  // per penalty stage
  Discretization disc;
  BoundsSpec bounds;

  void validate() const;
  int stages() const noexcept { return static_cast<int>(lambda_schedule.size()); }
  /// Inner settings for stage s; tolerance and iteration cap are
  /// interpolated (geometrically / linearly) from first to last stage.
  InnerSettings stage(int s) const;
};

struct InnerResult {
  StackedState x;
  double objective = 0.0;
  double grad_norm = 0.0;  // max-norm
  int iterations = 0;
  bool converged = false;
  std::string reason;
};

struct ValueGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;  // flattened parameter order
  InnerResult inner;
  /// False when the inner solve stopped before reaching its tolerance.
  bool accurate = true;
};

struct ObjectiveRecord {
  int stage = 0;
  int iteration = 0;
  double lambda = 0.0;
  double value = 0.0;
};

struct ComponentStats {
  double pearson = 0.0;
  double r_squared = 0.0;
};

struct FitResult {
  VdpParams params;
  Trajectory states;
  int substeps = 1;
  std::vector<ObjectiveRecord> objective_history;
  std::vector<ComponentStats> stats;
  std::optional<double> fitness;
  bool converged = false;
  std::string reason;
  /// The observations the fit (and its stats) refer to.
  Eigen::MatrixXd observations;

  Discretization discretization() const { return {states.dt, substeps}; }
};

/// 0.5 * ||z - Hx||^2 + 0.5 * lambda * ||G(x) - eta0||^2
double objective(const StackedState& x, const VdpParams& params,
                 const InitAnchor& anchor, const ObservationSet& z,
                 double lambda, const Discretization& disc);

/// Gauss-Newton minimization over the states at fixed parameters. Each step
/// solves the block-tridiagonal normal equations
///   (H^T H + lambda G_x^T G_x) d = -grad
/// followed by Armijo backtracking (halving, c = 1e-4).
InnerResult inner_solve(const VdpParams& params, const InitAnchor& anchor,
                        const ObservationSet& z, const InnerSettings& settings,
                        const Discretization& disc, const StackedState& x_init);

/// Value function and its parameter gradient,
///   lambda * G_p(x_hat)^T (G(x_hat) - eta0),
/// at the inner minimizer x_hat (warm-started at `x_init`).
ValueGradient value_gradient(const VdpParams& params, const InitAnchor& anchor,
                             const ObservationSet& z,
                             const InnerSettings& settings,
                             const Discretization& disc,
                             const StackedState& x_init);

/// x2 ~ -cumsum(x1) * dt, shifted to zero mean per component.
Eigen::MatrixXd hidden_state_guess(const Eigen::MatrixXd& x1, double dt);

/// Stacked state with x1 from the observations and x2 from hidden_state_guess.
StackedState initial_states(const ObservationSet& z, double dt);

/// Stacked state with x1 from the observations and the given hidden track.
StackedState initial_states(const ObservationSet& z,
                            const Eigen::MatrixXd& x2);

/// Per-component Pearson / R^2 of the x1 tracks against the observations.
std::vector<ComponentStats> component_stats(const ObservationSet& z,
                                            const Eigen::MatrixXd& x1);

/// Projected-gradient minimization of the value function over (alpha, W)
/// subject to box bounds, one pass per penalty stage. Barzilai-Borwein trial
/// steps with backtracking; inner solves are warm-started.
///
/// If `x_init` is absent the hidden track comes from hidden_state_guess. The
/// anchor is the first block of `x_init`.
FitResult fit(const ObservationSet& z, const PenaltyConfig& cfg,
              const VdpParams& init,
              const std::optional<StackedState>& x_init = std::nullopt);

}  // namespace vdp
