#pragma once

#include "pdc/core.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

namespace pdc {

using MatrixXd = Eigen::MatrixXd;
using SparseMatrixXd = Eigen::SparseMatrix<double>;

class BlockSparseMatrix;

/// Abstract square or rectangular linear map on flat dof vectors.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  /// y = A x. y is resized by the callee.
  virtual void apply(const VectorXd& x, VectorXd& y) const = 0;
  /// y = A^T x.
  virtual void apply_transpose(const VectorXd& x, VectorXd& y) const = 0;
  virtual VectorXd diagonal() const = 0;
  /// Result of the numerical symmetry check performed at construction.
  virtual bool symmetric() const = 0;

  VectorXd operator*(const VectorXd& x) const {
    VectorXd y;
    apply(x, y);
    return y;
  }
  /// Dense copy obtained column by column. Intended for small operators.
  MatrixXd to_dense() const;
  /// Dense copy by the cheapest available route.
  virtual MatrixXd materialize() const { return to_dense(); }
  /// Assembled block form when the operator can provide one, else nullptr.
  virtual std::shared_ptr<const BlockSparseMatrix> assembled() const { return nullptr; }
  /// Compressed-column copy; falls back to the dense copy when nothing better exists.
  virtual SparseMatrixXd to_sparse() const;
};

/// Relative asymmetry |x^T A y - y^T A x| / (|x| |A y| + |y| |A x|) over random probes.
double probe_asymmetry(const LinearOperator& op, int probes = 2, std::uint64_t seed = 7);

/// Block compressed-row matrix with dense 3x3 blocks.
class BlockSparseMatrix final : public LinearOperator {
 public:
  BlockSparseMatrix() = default;
  BlockSparseMatrix(Index block_rows, Index block_cols, std::vector<Index> row_ptr,
                    std::vector<Index> col_idx, std::vector<Mat3> blocks);

  Index rows() const override { return 3 * block_rows_; }
  Index cols() const override { return 3 * block_cols_; }
  Index block_rows() const { return block_rows_; }
  Index block_cols() const { return block_cols_; }
  Index num_blocks() const { return static_cast<Index>(blocks_.size()); }

  void apply(const VectorXd& x, VectorXd& y) const override;
  void apply_transpose(const VectorXd& x, VectorXd& y) const override;
  VectorXd diagonal() const override;
  bool symmetric() const override { return symmetric_; }

  /// Pointer to block (i, j), or nullptr when structurally zero.
  const Mat3* block(Index i, Index j) const;
  const std::vector<Index>& row_ptr() const { return row_ptr_; }
  const std::vector<Index>& col_idx() const { return col_idx_; }
  const std::vector<Mat3>& blocks() const { return blocks_; }

  /// max |A - A^T| / max |A|, computed exactly against the transpose pattern.
  double asymmetry() const;
  bool pattern_symmetric() const;
  double max_abs() const;
  /// Sets the symmetry flag when asymmetry() <= tol.
  bool mark_symmetric(double tol = 1e-12);

  MatrixXd dense() const;
  MatrixXd materialize() const override { return dense(); }
  SparseMatrixXd to_sparse() const override;

 private:
  Index block_rows_ = 0;
  Index block_cols_ = 0;
  std::vector<Index> row_ptr_;
  std::vector<Index> col_idx_;
  std::vector<Mat3> blocks_;
  bool symmetric_ = false;
};

/// Accumulates 3x3 blocks in arbitrary order.
class BlockSparseBuilder {
 public:
  BlockSparseBuilder(Index block_rows, Index block_cols);
  void add(Index i, Index j, const Mat3& value);
  BlockSparseMatrix build() const;

 private:
  Index block_cols_;
  std::vector<std::map<Index, Mat3>> rows_;
};

enum class DofKind : std::uint8_t { Free, Control, Fixed };

/// Splits 3N dofs into free (I), control (C) and fixed (D) groups.
class DofPartition {
 public:
  DofPartition() = default;
  explicit DofPartition(std::vector<DofKind> kinds);

  Index size() const { return static_cast<Index>(kinds_.size()); }
  DofKind kind(Index dof) const { return kinds_[dof]; }
  const std::vector<DofKind>& kinds() const { return kinds_; }
  const std::vector<Index>& dofs(DofKind k) const { return lists_[static_cast<int>(k)]; }
  Index count(DofKind k) const { return static_cast<Index>(dofs(k).size()); }
  /// Position of `dof` inside its group.
  Index local(Index dof) const { return local_[dof]; }

  VectorXd gather(const VectorXd& full, DofKind k) const;
  /// Writes `part` into the `k` entries of `full`, leaving others untouched.
  void scatter(const VectorXd& part, DofKind k, VectorXd& full) const;
  /// Accumulating variant of scatter.
  void scatter_add(const VectorXd& part, DofKind k, VectorXd& full) const;

 private:
  std::vector<DofKind> kinds_;
  std::array<std::vector<Index>, 3> lists_;
  std::vector<Index> local_;
};

/// Restriction P_R A E_C of a square operator on the full dof space.
class SubOperator final : public LinearOperator {
 public:
  SubOperator(std::shared_ptr<const LinearOperator> parent, std::shared_ptr<const DofPartition> part,
              DofKind row_kind, DofKind col_kind);

  Index rows() const override { return part_->count(row_kind_); }
  Index cols() const override { return part_->count(col_kind_); }
  void apply(const VectorXd& x, VectorXd& y) const override;
  void apply_transpose(const VectorXd& x, VectorXd& y) const override;
  VectorXd diagonal() const override;
  bool symmetric() const override { return symmetric_; }
  MatrixXd materialize() const override;
  SparseMatrixXd to_sparse() const override;

 private:
  std::shared_ptr<const LinearOperator> parent_;
  std::shared_ptr<const DofPartition> part_;
  DofKind row_kind_;
  DofKind col_kind_;
  bool symmetric_ = false;
  mutable VectorXd in_;
  mutable VectorXd out_;
};

/// Wraps a dense matrix; used by tests and small oracles.
class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(MatrixXd a, double symmetry_tol = 1e-12);
  Index rows() const override { return a_.rows(); }
  Index cols() const override { return a_.cols(); }
  void apply(const VectorXd& x, VectorXd& y) const override { y = a_ * x; }
  void apply_transpose(const VectorXd& x, VectorXd& y) const override { y = a_.transpose() * x; }
  VectorXd diagonal() const override { return a_.diagonal(); }
  bool symmetric() const override { return symmetric_; }
  const MatrixXd& matrix() const { return a_; }

 private:
  MatrixXd a_;
  bool symmetric_ = false;
};

}  // namespace pdc
