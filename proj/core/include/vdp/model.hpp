#pragma once

#include <Eigen/Dense>

namespace vdp {

/// Parameters of the coupled oscillator
///
///   dx1_i/dt = a1_i * x1_i * (1 - x1_i^2) + a2_i * x2_i + sum_j W_ij * x1_j
///   dx2_i/dt = -x1_i
///
/// Row i of `coupling` holds the input weights into component i.
struct VdpParams {
  Eigen::MatrixX2d alpha;    // m x 2, columns (a1, a2)
  Eigen::MatrixXd coupling;  // m x m

  VdpParams() = default;
  VdpParams(Eigen::MatrixX2d alpha, Eigen::MatrixXd coupling);

  static VdpParams zeros(int m);

  int components() const noexcept { return static_cast<int>(alpha.rows()); }

  /// Throws ContractError on shape mismatch or non-finite entries.
  void validate() const;

  /// Length of the flattened parameter vector: 2m + m^2.
  static int parameter_count(int m) noexcept { return 2 * m + m * m; }

  /// Flattened order: [a1_1..a1_m, a2_1..a2_m, W_11, W_12, ..., W_mm].
  Eigen::VectorXd flatten() const;
  static VdpParams unflatten(const Eigen::Ref<const Eigen::VectorXd>& v, int m);
};

struct State {
  Eigen::VectorXd x1;  // observed activity
  Eigen::VectorXd x2;  // hidden excitability

  State() = default;
  State(Eigen::VectorXd x1, Eigen::VectorXd x2);

  static State zeros(int m);

  int components() const noexcept { return static_cast<int>(x1.size()); }
  bool all_finite() const;
  double max_abs() const;

  /// Interleaved layout (x1_0, x2_0, x1_1, x2_1, ...), the per-time block
  /// used by the stacked constraint system and every Jacobian here.
  Eigen::VectorXd interleaved() const;
  static State from_interleaved(const Eigen::Ref<const Eigen::VectorXd>& v);
};

using StateDerivative = State;

/// Time discretization. Each sample interval `dt` is covered by `substeps`
/// explicit Euler steps of size dt / substeps.
struct Discretization {
  double dt = 1.0;
  int substeps = 1;

  void validate() const;
};

/// Latent path over N samples. Row k of x1/x2 is the state at sample k.
struct Trajectory {
  Eigen::MatrixXd x1;  // N x m
  Eigen::MatrixXd x2;  // N x m
  double dt = 1.0;

  int length() const noexcept { return static_cast<int>(x1.rows()); }
  int components() const noexcept { return static_cast<int>(x1.cols()); }

  State state(int k) const;
  void set_state(int k, const State& s);
};

/// Per-sample derivatives of the transition map g. Rows and state columns use
/// the interleaved layout; parameter columns follow VdpParams::flatten.
struct StepJacobians {
  Eigen::MatrixXd state;     // 2m x 2m, dg/dx
  Eigen::MatrixXd alpha;     // 2m x 2m, dg/d(a1, a2)
  Eigen::MatrixXd coupling;  // 2m x m^2, dg/dW

  /// [alpha | coupling], 2m x (2m + m^2).
  Eigen::MatrixXd params() const;
};

/// States whose magnitude exceeds this abort a simulation.
inline constexpr double kDivergenceBound = 1e6;

StateDerivative vector_field(const VdpParams& params, const State& s);

/// One explicit Euler step: s + dt * vector_field(s).
State step(const VdpParams& params, const State& s, double dt);

/// Transition map g over one sample interval (substeps Euler steps).
State transition(const VdpParams& params, const State& s,
                 const Discretization& disc);

/// Iterates the transition map: states[0] = s0, states[k+1] = g(states[k]).
/// Throws DivergenceError naming the first state that is non-finite or
/// exceeds kDivergenceBound.
Trajectory simulate(const VdpParams& params, const State& s0, int n,
                    const Discretization& disc);
inline Trajectory simulate(const VdpParams& params, const State& s0, int n,
                           double dt) {
  return simulate(params, s0, n, Discretization{dt, 1});
}

/// Analytic derivatives of the transition map, chained across substeps.
StepJacobians jacobians(const VdpParams& params, const State& s,
                        const Discretization& disc);
inline StepJacobians jacobians(const VdpParams& params, const State& s,
                               double dt) {
  return jacobians(params, s, Discretization{dt, 1});
}

}  // namespace vdp
