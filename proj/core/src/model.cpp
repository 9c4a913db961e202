#include "vdp/model.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "vdp/error.hpp"

namespace vdp {

namespace {

void require_state(const VdpParams& params, const State& s) {
  const int m = params.components();
  if (s.x1.size() != m || s.x2.size() != m) {
    std::ostringstream os;
    os << "state has " << s.x1.size() << "/" << s.x2.size()
       << " entries, parameters describe " << m << " components";
    throw ContractError(os.str());
  }
}

void require_step(double dt, int substeps) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) {
    throw ContractError("step size must be finite and nonnegative");
  }
  if (substeps < 1) {
    throw ContractError("substep count must be at least 1");
  }
}

}  // namespace

VdpParams::VdpParams(Eigen::MatrixX2d alpha_, Eigen::MatrixXd coupling_)
    : alpha(std::move(alpha_)), coupling(std::move(coupling_)) {}

VdpParams VdpParams::zeros(int m) {
  if (m < 1) throw ContractError("component count must be positive");
  return VdpParams(Eigen::MatrixX2d::Zero(m, 2), Eigen::MatrixXd::Zero(m, m));
}

void VdpParams::validate() const {
  const auto m = alpha.rows();
  if (m < 1) throw ContractError("parameters need at least one component");
  if (coupling.rows() != m || coupling.cols() != m) {
    std::ostringstream os;
    os << "coupling is " << coupling.rows() << "x" << coupling.cols()
       << ", expected " << m << "x" << m;
    throw ContractError(os.str());
  }
  if (!alpha.allFinite() || !coupling.allFinite()) {
    throw ContractError("parameters contain non-finite entries");
  }
}

Eigen::VectorXd VdpParams::flatten() const {
  const int m = components();
  Eigen::VectorXd v(parameter_count(m));
  v.head(m) = alpha.col(0);
  v.segment(m, m) = alpha.col(1);
  for (int i = 0; i < m; ++i) {
    v.segment(2 * m + i * m, m) = coupling.row(i).transpose();
  }
  return v;
}

VdpParams VdpParams::unflatten(const Eigen::Ref<const Eigen::VectorXd>& v,
                               int m) {
  if (m < 1 || v.size() != parameter_count(m)) {
    throw ContractError("flattened parameter vector has the wrong length");
  }
  VdpParams p = zeros(m);
  p.alpha.col(0) = v.head(m);
  p.alpha.col(1) = v.segment(m, m);
  for (int i = 0; i < m; ++i) {
    p.coupling.row(i) = v.segment(2 * m + i * m, m).transpose();
  }
  return p;
}

State::State(Eigen::VectorXd x1_, Eigen::VectorXd x2_)
    : x1(std::move(x1_)), x2(std::move(x2_)) {}

State State::zeros(int m) {
  return State(Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m));
}

bool State::all_finite() const { return x1.allFinite() && x2.allFinite(); }

double State::max_abs() const {
  double a = x1.size() ? x1.cwiseAbs().maxCoeff() : 0.0;
  double b = x2.size() ? x2.cwiseAbs().maxCoeff() : 0.0;
  return std::max(a, b);
}

Eigen::VectorXd State::interleaved() const {
  const int m = components();
  Eigen::VectorXd v(2 * m);
  for (int i = 0; i < m; ++i) {
    v(2 * i) = x1(i);
    v(2 * i + 1) = x2(i);
  }
  return v;
}

State State::from_interleaved(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() % 2 != 0) {
    throw ContractError("interleaved state must have even length");
  }
  const auto m = v.size() / 2;
  State s = zeros(static_cast<int>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    s.x1(i) = v(2 * i);
    s.x2(i) = v(2 * i + 1);
  }
  return s;
}

void Discretization::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ContractError("dt must be finite and positive");
  }
  if (substeps < 1) throw ContractError("substeps must be at least 1");
}

State Trajectory::state(int k) const {
  return State(x1.row(k).transpose(), x2.row(k).transpose());
}

void Trajectory::set_state(int k, const State& s) {
  x1.row(k) = s.x1.transpose();
  x2.row(k) = s.x2.transpose();
}

Eigen::MatrixXd StepJacobians::params() const {
  Eigen::MatrixXd out(alpha.rows(), alpha.cols() + coupling.cols());
  out << alpha, coupling;
  return out;
}

StateDerivative vector_field(const VdpParams& params, const State& s) {
  require_state(params, s);
  const auto& a1 = params.alpha.col(0).array();
  const auto& a2 = params.alpha.col(1).array();
  const auto x = s.x1.array();
  Eigen::VectorXd dx1 =
      (a1 * x * (1.0 - x.square()) + a2 * s.x2.array()).matrix() +
      params.coupling * s.x1;
  return State(std::move(dx1), -s.x1);
}

State step(const VdpParams& params, const State& s, double dt) {
  require_step(dt, 1);
  const State d = vector_field(params, s);
  return State(s.x1 + dt * d.x1, s.x2 + dt * d.x2);
}

State transition(const VdpParams& params, const State& s,
                 const Discretization& disc) {
  require_step(disc.dt, disc.substeps);
  const double h = disc.dt / disc.substeps;
  State cur = s;
  for (int j = 0; j < disc.substeps; ++j) cur = step(params, cur, h);
  return cur;
}

Trajectory simulate(const VdpParams& params, const State& s0, int n,
                    const Discretization& disc) {
  params.validate();
  disc.validate();
  require_state(params, s0);
  if (n < 2) throw ContractError("a trajectory needs at least 2 samples");

  const int m = params.components();
  Trajectory traj{Eigen::MatrixXd(n, m), Eigen::MatrixXd(n, m), disc.dt};
  State cur = s0;
  for (int k = 0; k < n; ++k) {
    if (k > 0) cur = transition(params, cur, disc);
    if (!cur.all_finite() || cur.max_abs() > kDivergenceBound) {
      std::ostringstream os;
      os << "simulation diverged at step " << k << " (|x| > "
         << kDivergenceBound << " or non-finite)";
      throw DivergenceError(k, os.str());
    }
    traj.set_state(k, cur);
  }
  return traj;
}

namespace {

// Derivatives of a single Euler step of size h at state s.
void euler_derivatives(const VdpParams& params, const State& s, double h,
                       Eigen::MatrixXd& dx, Eigen::MatrixXd& dp) {
  const int m = params.components();
  const int np = VdpParams::parameter_count(m);
  dx.setIdentity(2 * m, 2 * m);
  dp.setZero(2 * m, np);
  for (int i = 0; i < m; ++i) {
    const double x1 = s.x1(i);
    const int r1 = 2 * i;
    const int r2 = 2 * i + 1;
    dx(r1, r1) += h * params.alpha(i, 0) * (1.0 - 3.0 * x1 * x1);
    for (int j = 0; j < m; ++j) dx(r1, 2 * j) += h * params.coupling(i, j);
    dx(r1, r2) += h * params.alpha(i, 1);
    dx(r2, r1) -= h;

    dp(r1, i) = h * x1 * (1.0 - x1 * x1);
    dp(r1, m + i) = h * s.x2(i);
    for (int j = 0; j < m; ++j) dp(r1, 2 * m + i * m + j) = h * s.x1(j);
  }
}

}  // namespace

StepJacobians jacobians(const VdpParams& params, const State& s,
                        const Discretization& disc) {
  params.validate();
  require_state(params, s);
  require_step(disc.dt, disc.substeps);

  const int m = params.components();
  const double h = disc.dt / disc.substeps;
  Eigen::MatrixXd jx = Eigen::MatrixXd::Identity(2 * m, 2 * m);
  Eigen::MatrixXd jp = Eigen::MatrixXd::Zero(2 * m, VdpParams::parameter_count(m));
  Eigen::MatrixXd ax, ap;
  State cur = s;
  for (int j = 0; j < disc.substeps; ++j) {
    euler_derivatives(params, cur, h, ax, ap);
    jp = ax * jp + ap;
    jx = ax * jx;
    if (j + 1 < disc.substeps) cur = step(params, cur, h);
  }

  StepJacobians out;
  out.state = std::move(jx);
  out.alpha = jp.leftCols(2 * m);
  out.coupling = jp.rightCols(m * m);
  return out;
}

}  // namespace vdp
