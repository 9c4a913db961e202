#pragma once

#include <vector>

#include <Eigen/Dense>

namespace vdp {

/// Symmetric block-tridiagonal matrix with n square blocks of equal size.
/// Stores the diagonal blocks and the blocks below the diagonal; the upper
/// blocks are their transposes.
class BlockTridiagonal {
 public:
  BlockTridiagonal(int block_size, int blocks);

  int block_size() const noexcept { return b_; }
  int blocks() const noexcept { return n_; }
  int dim() const noexcept { return b_ * n_; }

  Eigen::MatrixXd& diag(int k) { return diag_[k]; }
  const Eigen::MatrixXd& diag(int k) const { return diag_[k]; }
  /// Block (k+1, k).
  Eigen::MatrixXd& lower(int k) { return lower_[k]; }
  const Eigen::MatrixXd& lower(int k) const { return lower_[k]; }

  Eigen::VectorXd multiply(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd to_dense() const;

  /// Block Cholesky factorization followed by forward/back substitution;
  /// O(n b^3). Throws NumericError if the matrix is not positive definite.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  int b_;
  int n_;
  std::vector<Eigen::MatrixXd> diag_;
  std::vector<Eigen::MatrixXd> lower_;
};

}  // namespace vdp
