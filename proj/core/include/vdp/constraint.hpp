#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vdp/model.hpp"

namespace vdp {

/// All N states packed into one vector of length 2mN. Time-major; within a
/// time block the layout is interleaved per component (x1_0, x2_0, x1_1, ...).
class StackedState {
 public:
  StackedState() = default;
  StackedState(int components, int length);
  StackedState(Eigen::VectorXd flat, int components, int length);

  static StackedState from_trajectory(const Trajectory& traj);
  Trajectory to_trajectory(double dt) const;

  int components() const noexcept { return m_; }
  int length() const noexcept { return n_; }
  int block_size() const noexcept { return 2 * m_; }

  const Eigen::VectorXd& flat() const noexcept { return flat_; }
  Eigen::VectorXd& flat() noexcept { return flat_; }

  Eigen::Index index(int k, int component, int variable) const noexcept {
    return (static_cast<Eigen::Index>(k) * m_ + component) * 2 + variable;
  }
  double x1(int k, int i) const { return flat_(index(k, i, 0)); }
  double x2(int k, int i) const { return flat_(index(k, i, 1)); }

  State state(int k) const;
  auto block(int k) const { return flat_.segment(static_cast<Eigen::Index>(k) * 2 * m_, 2 * m_); }
  auto block(int k) { return flat_.segment(static_cast<Eigen::Index>(k) * 2 * m_, 2 * m_); }

 private:
  Eigen::VectorXd flat_;
  int m_ = 0;
  int n_ = 0;
};

/// The anchor x0 for the first block of the stacked constraint.
struct InitAnchor {
  State x0;
};

/// Jacobian of the stacked residual with respect to the states. Block lower
/// bidiagonal: identity diagonal, sub-diagonal block k (k = 1..N-1) equal to
/// -dg/dx evaluated at state k-1. Only the sub-diagonal blocks are stored.
class BidiagonalJacobian {
 public:
  BidiagonalJacobian(int components, int length);

  int components() const noexcept { return m_; }
  int length() const noexcept { return n_; }
  int rows() const noexcept { return 2 * m_ * n_; }

  /// Sub-diagonal block in block-row k, k in [1, N).
  const Eigen::MatrixXd& sub(int k) const { return sub_[k - 1]; }
  Eigen::MatrixXd& sub(int k) { return sub_[k - 1]; }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& v) const;

  /// Dense copy for inspection and testing. Refuses when the dimension
  /// exceeds `max_dim`.
  Eigen::MatrixXd to_dense(int max_dim = kDefaultDenseLimit) const;

  static constexpr int kDefaultDenseLimit = 4096;

 private:
  int m_;
  int n_;
  std::vector<Eigen::MatrixXd> sub_;
};

/// Jacobian of the stacked residual with respect to the flattened parameters
/// (VdpParams::flatten order). Block row 0 is zero; block row k >= 1 depends
/// only on state k-1 and holds -dg/dp there.
class ParamJacobian {
 public:
  ParamJacobian(int components, int length);

  int components() const noexcept { return m_; }
  int length() const noexcept { return n_; }
  int cols() const noexcept { return VdpParams::parameter_count(m_); }

  const Eigen::MatrixXd& block(int k) const { return blocks_[k - 1]; }
  Eigen::MatrixXd& block(int k) { return blocks_[k - 1]; }

  Eigen::VectorXd apply(const Eigen::VectorXd& dp) const;
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd to_dense(int max_dim = BidiagonalJacobian::kDefaultDenseLimit) const;

 private:
  int m_;
  int n_;
  std::vector<Eigen::MatrixXd> blocks_;
};

/// G(x, params) - eta0: block 0 = x^0 - anchor, block k = x^k - g(x^{k-1}).
Eigen::VectorXd residual(const StackedState& x, const VdpParams& params,
                         const InitAnchor& anchor, const Discretization& disc);

BidiagonalJacobian residual_jacobian_x(const StackedState& x,
                                       const VdpParams& params,
                                       const Discretization& disc);

ParamJacobian residual_jacobian_params(const StackedState& x,
                                       const VdpParams& params,
                                       const Discretization& disc);

/// Residual and both Jacobians from a single pass over the states.
struct Linearization {
  Eigen::VectorXd residual;
  BidiagonalJacobian state_jacobian;
  ParamJacobian param_jacobian;
};

Linearization linearize(const StackedState& x, const VdpParams& params,
                        const InitAnchor& anchor, const Discretization& disc,
                        bool with_params = true);

}  // namespace vdp
