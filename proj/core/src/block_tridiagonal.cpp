#include "vdp/block_tridiagonal.hpp"

#include <sstream>

#include "vdp/error.hpp"

namespace vdp {

BlockTridiagonal::BlockTridiagonal(int block_size, int blocks)
    : b_(block_size),
      n_(blocks),
      diag_(blocks, Eigen::MatrixXd::Zero(block_size, block_size)),
      lower_(blocks > 1 ? blocks - 1 : 0,
             Eigen::MatrixXd::Zero(block_size, block_size)) {
  if (block_size < 1 || blocks < 1) {
    throw ContractError("block tridiagonal matrix needs positive dimensions");
  }
}

Eigen::VectorXd BlockTridiagonal::multiply(const Eigen::VectorXd& v) const {
  if (v.size() != dim()) throw ContractError("vector size mismatch");
  Eigen::VectorXd out(dim());
  for (int k = 0; k < n_; ++k) {
    auto o = out.segment(k * b_, b_);
    o.noalias() = diag_[k] * v.segment(k * b_, b_);
    if (k > 0) o.noalias() += lower_[k - 1] * v.segment((k - 1) * b_, b_);
    if (k + 1 < n_) {
      o.noalias() += lower_[k].transpose() * v.segment((k + 1) * b_, b_);
    }
  }
  return out;
}

Eigen::MatrixXd BlockTridiagonal::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(dim(), dim());
  for (int k = 0; k < n_; ++k) {
    d.block(k * b_, k * b_, b_, b_) = diag_[k];
    if (k + 1 < n_) {
      d.block((k + 1) * b_, k * b_, b_, b_) = lower_[k];
      d.block(k * b_, (k + 1) * b_, b_, b_) = lower_[k].transpose();
    }
  }
  return d;
}

Eigen::VectorXd BlockTridiagonal::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != dim()) throw ContractError("right-hand side size mismatch");

  // A = L L^T with L block lower bidiagonal: diagonal factors chol[k],
  // sub-diagonal blocks coupling[k] = lower(k-1) * chol[k-1]^{-T}.
  std::vector<Eigen::LLT<Eigen::MatrixXd>> chol(n_);
  std::vector<Eigen::MatrixXd> coupling(n_);
  for (int k = 0; k < n_; ++k) {
    Eigen::MatrixXd d = diag_[k];
    if (k > 0) {
      // C = B * L^{-T}  <=>  C^T = L^{-1} B^T
      Eigen::MatrixXd ct = chol[k - 1].matrixL().solve(lower_[k - 1].transpose());
      coupling[k] = ct.transpose();
      d.noalias() -= coupling[k] * ct;
    }
    chol[k].compute(d);
    if (chol[k].info() != Eigen::Success) {
      std::ostringstream os;
      os << "block tridiagonal matrix is not positive definite (block " << k
         << ")";
      throw NumericError(os.str());
    }
  }

  Eigen::VectorXd y(dim());
  for (int k = 0; k < n_; ++k) {
    Eigen::VectorXd r = rhs.segment(k * b_, b_);
    if (k > 0) r.noalias() -= coupling[k] * y.segment((k - 1) * b_, b_);
    y.segment(k * b_, b_) = chol[k].matrixL().solve(r);
  }
  Eigen::VectorXd x(dim());
  for (int k = n_ - 1; k >= 0; --k) {
    Eigen::VectorXd r = y.segment(k * b_, b_);
    if (k + 1 < n_) {
      r.noalias() -= coupling[k + 1].transpose() * x.segment((k + 1) * b_, b_);
    }
    x.segment(k * b_, b_) = chol[k].matrixU().solve(r);
  }
  return x;
}

}  // namespace vdp
