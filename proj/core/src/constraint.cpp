#include "vdp/constraint.hpp"

#include <sstream>
#include <utility>

#include "vdp/error.hpp"

namespace vdp {

namespace {

void require_layout(const StackedState& x, const VdpParams& params) {
  params.validate();
  if (x.components() != params.components()) {
    std::ostringstream os;
    os << "stacked state has " << x.components()
       << " components, parameters describe " << params.components();
    throw ContractError(os.str());
  }
  if (x.length() < 1) throw ContractError("stacked state is empty");
}

void require_dense(int dim, int max_dim) {
  if (dim > max_dim) {
    std::ostringstream os;
    os << "refusing to materialize a dense " << dim << "x" << dim
       << " Jacobian (limit " << max_dim << ")";
    throw ContractError(os.str());
  }
}

}  // namespace

StackedState::StackedState(int components, int length)
    : flat_(Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(components) * length)),
      m_(components),
      n_(length) {
  if (components < 1 || length < 1) {
    throw ContractError("stacked state needs positive dimensions");
  }
}

StackedState::StackedState(Eigen::VectorXd flat, int components, int length)
    : flat_(std::move(flat)), m_(components), n_(length) {
  if (components < 1 || length < 1 ||
      flat_.size() != 2 * static_cast<Eigen::Index>(components) * length) {
    throw ContractError("stacked state length must equal 2*m*N");
  }
}

StackedState StackedState::from_trajectory(const Trajectory& traj) {
  StackedState x(traj.components(), traj.length());
  for (int k = 0; k < traj.length(); ++k) {
    for (int i = 0; i < traj.components(); ++i) {
      x.flat_(x.index(k, i, 0)) = traj.x1(k, i);
      x.flat_(x.index(k, i, 1)) = traj.x2(k, i);
    }
  }
  return x;
}

Trajectory StackedState::to_trajectory(double dt) const {
  Trajectory t{Eigen::MatrixXd(n_, m_), Eigen::MatrixXd(n_, m_), dt};
  for (int k = 0; k < n_; ++k) {
    for (int i = 0; i < m_; ++i) {
      t.x1(k, i) = x1(k, i);
      t.x2(k, i) = x2(k, i);
    }
  }
  return t;
}

State StackedState::state(int k) const {
  return State::from_interleaved(block(k));
}

BidiagonalJacobian::BidiagonalJacobian(int components, int length)
    : m_(components),
      n_(length),
      sub_(length > 1 ? length - 1 : 0,
           Eigen::MatrixXd::Zero(2 * components, 2 * components)) {}

Eigen::VectorXd BidiagonalJacobian::apply(const Eigen::VectorXd& v) const {
  const int b = 2 * m_;
  Eigen::VectorXd out = v;
  for (int k = 1; k < n_; ++k) {
    out.segment(k * b, b) += sub_[k - 1] * v.segment((k - 1) * b, b);
  }
  return out;
}

Eigen::VectorXd BidiagonalJacobian::apply_transpose(
    const Eigen::VectorXd& v) const {
  const int b = 2 * m_;
  Eigen::VectorXd out = v;
  for (int k = 1; k < n_; ++k) {
    out.segment((k - 1) * b, b).noalias() +=
        sub_[k - 1].transpose() * v.segment(k * b, b);
  }
  return out;
}

Eigen::MatrixXd BidiagonalJacobian::to_dense(int max_dim) const {
  require_dense(rows(), max_dim);
  const int b = 2 * m_;
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(rows(), rows());
  for (int k = 1; k < n_; ++k) d.block(k * b, (k - 1) * b, b, b) = sub_[k - 1];
  return d;
}

ParamJacobian::ParamJacobian(int components, int length)
    : m_(components),
      n_(length),
      blocks_(length > 1 ? length - 1 : 0,
              Eigen::MatrixXd::Zero(2 * components,
                                    VdpParams::parameter_count(components))) {}

Eigen::VectorXd ParamJacobian::apply(const Eigen::VectorXd& dp) const {
  const int b = 2 * m_;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b) * n_);
  for (int k = 1; k < n_; ++k) out.segment(k * b, b) = blocks_[k - 1] * dp;
  return out;
}

Eigen::VectorXd ParamJacobian::apply_transpose(const Eigen::VectorXd& v) const {
  const int b = 2 * m_;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(cols());
  for (int k = 1; k < n_; ++k) {
    out.noalias() += blocks_[k - 1].transpose() * v.segment(k * b, b);
  }
  return out;
}

Eigen::MatrixXd ParamJacobian::to_dense(int max_dim) const {
  const int rows = 2 * m_ * n_;
  require_dense(rows, max_dim);
  const int b = 2 * m_;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, cols());
  for (int k = 1; k < n_; ++k) d.middleRows(k * b, b) = blocks_[k - 1];
  return d;
}

Linearization linearize(const StackedState& x, const VdpParams& params,
                        const InitAnchor& anchor, const Discretization& disc,
                        bool with_params) {
  require_layout(x, params);
  if (anchor.x0.components() != params.components() ||
      anchor.x0.x2.size() != params.components()) {
    throw ContractError("anchor state does not match the component count");
  }
  const int m = x.components();
  const int n = x.length();
  const int b = 2 * m;

  Linearization lin{Eigen::VectorXd(x.flat().size()), BidiagonalJacobian(m, n),
                    ParamJacobian(with_params ? m : 1, with_params ? n : 1)};
  lin.residual.head(b) = x.block(0) - anchor.x0.interleaved();
  for (int k = 1; k < n; ++k) {
    const State prev = x.state(k - 1);
    lin.residual.segment(k * b, b) =
        x.block(k) - transition(params, prev, disc).interleaved();
    StepJacobians jac = jacobians(params, prev, disc);
    lin.state_jacobian.sub(k) = -jac.state;
    if (with_params) lin.param_jacobian.block(k) = -jac.params();
  }
  return lin;
}

Eigen::VectorXd residual(const StackedState& x, const VdpParams& params,
                         const InitAnchor& anchor, const Discretization& disc) {
  require_layout(x, params);
  if (anchor.x0.components() != params.components()) {
    throw ContractError("anchor state does not match the component count");
  }
  const int b = x.block_size();
  Eigen::VectorXd r(x.flat().size());
  r.head(b) = x.block(0) - anchor.x0.interleaved();
  for (int k = 1; k < x.length(); ++k) {
    r.segment(k * b, b) =
        x.block(k) - transition(params, x.state(k - 1), disc).interleaved();
  }
  return r;
}

BidiagonalJacobian residual_jacobian_x(const StackedState& x,
                                       const VdpParams& params,
                                       const Discretization& disc) {
  require_layout(x, params);
  BidiagonalJacobian jac(x.components(), x.length());
  for (int k = 1; k < x.length(); ++k) {
    jac.sub(k) = -jacobians(params, x.state(k - 1), disc).state;
  }
  return jac;
}

ParamJacobian residual_jacobian_params(const StackedState& x,
                                       const VdpParams& params,
                                       const Discretization& disc) {
  require_layout(x, params);
  ParamJacobian jac(x.components(), x.length());
  for (int k = 1; k < x.length(); ++k) {
    jac.block(k) = -jacobians(params, x.state(k - 1), disc).params();
  }
  return jac;
}

}  // namespace vdp
