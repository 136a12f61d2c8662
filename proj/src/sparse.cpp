#include "pdc/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pdc {

MatrixXd LinearOperator::to_dense() const {
  MatrixXd a(rows(), cols());
  VectorXd e = VectorXd::Zero(cols());
  VectorXd col;
  for (Index j = 0; j < cols(); ++j) {
    e[j] = 1.0;
    apply(e, col);
    a.col(j) = col;
    e[j] = 0.0;
  }
  return a;
}

SparseMatrixXd LinearOperator::to_sparse() const { return to_dense().sparseView(); }

double probe_asymmetry(const LinearOperator& op, int probes, std::uint64_t seed) {
  if (op.rows() != op.cols()) return std::numeric_limits<double>::infinity();
  if (op.rows() == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;
  VectorXd x(op.rows()), y(op.rows()), ax, ay;
  for (int p = 0; p < probes; ++p) {
    for (Index i = 0; i < x.size(); ++i) x[i] = dist(rng);
    for (Index i = 0; i < y.size(); ++i) y[i] = dist(rng);
    op.apply(x, ax);
    op.apply(y, ay);
    const double scale = x.norm() * ay.norm() + y.norm() * ax.norm();
    if (scale == 0.0) continue;
    worst = std::max(worst, std::abs(x.dot(ay) - y.dot(ax)) / scale);
  }
  return worst;
}

BlockSparseMatrix::BlockSparseMatrix(Index block_rows, Index block_cols, std::vector<Index> row_ptr,
                                     std::vector<Index> col_idx, std::vector<Mat3> blocks)
    : block_rows_(block_rows),
      block_cols_(block_cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      blocks_(std::move(blocks)) {
  if (static_cast<Index>(row_ptr_.size()) != block_rows_ + 1 || col_idx_.size() != blocks_.size() ||
      row_ptr_.back() != static_cast<Index>(col_idx_.size())) {
    throw ShapeError("inconsistent block sparse layout");
  }
}

void BlockSparseMatrix::apply(const VectorXd& x, VectorXd& y) const {
  if (x.size() != cols()) throw ShapeError("block matrix apply: input length mismatch");
  y.setZero(rows());
  for (Index i = 0; i < block_rows_; ++i) {
    Vec3 acc = Vec3::Zero();
    for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += blocks_[k] * x.segment<3>(3 * col_idx_[k]);
    y.segment<3>(3 * i) = acc;
  }
}

void BlockSparseMatrix::apply_transpose(const VectorXd& x, VectorXd& y) const {
  if (x.size() != rows()) throw ShapeError("block matrix transpose apply: input length mismatch");
  y.setZero(cols());
  for (Index i = 0; i < block_rows_; ++i) {
    const Vec3 xi = x.segment<3>(3 * i);
    for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) y.segment<3>(3 * col_idx_[k]) += blocks_[k].transpose() * xi;
  }
}

VectorXd BlockSparseMatrix::diagonal() const {
  VectorXd d = VectorXd::Zero(std::min(rows(), cols()));
  for (Index i = 0; i < std::min(block_rows_, block_cols_); ++i) {
    if (const Mat3* b = block(i, i)) d.segment<3>(3 * i) = b->diagonal();
  }
  return d;
}

const Mat3* BlockSparseMatrix::block(Index i, Index j) const {
  auto first = col_idx_.begin() + row_ptr_[i];
  auto last = col_idx_.begin() + row_ptr_[i + 1];
  auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return nullptr;
  return &blocks_[it - col_idx_.begin()];
}

bool BlockSparseMatrix::pattern_symmetric() const {
  if (block_rows_ != block_cols_) return false;
  for (Index i = 0; i < block_rows_; ++i) {
    for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (!block(col_idx_[k], i)) return false;
    }
  }
  return true;
}

double BlockSparseMatrix::max_abs() const {
  double m = 0.0;
  for (const Mat3& b : blocks_) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

double BlockSparseMatrix::asymmetry() const {
  if (block_rows_ != block_cols_) return std::numeric_limits<double>::infinity();
  const double scale = max_abs();
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (Index i = 0; i < block_rows_; ++i) {
    for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const Mat3* t = block(col_idx_[k], i);
      const Mat3 diff = t ? Mat3(blocks_[k] - t->transpose()) : blocks_[k];
      worst = std::max(worst, diff.cwiseAbs().maxCoeff());
    }
  }
  return worst / scale;
}

bool BlockSparseMatrix::mark_symmetric(double tol) {
  symmetric_ = asymmetry() <= tol;
  return symmetric_;
}

MatrixXd BlockSparseMatrix::dense() const {
  MatrixXd a = MatrixXd::Zero(rows(), cols());
  for (Index i = 0; i < block_rows_; ++i) {
    for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) a.block<3, 3>(3 * i, 3 * col_idx_[k]) = blocks_[k];
  }
  return a;
}

SparseMatrixXd BlockSparseMatrix::to_sparse() const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(9 * blocks_.size());
  for (Index i = 0; i < block_rows_; ++i)
    for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
          if (blocks_[k](r, c) != 0.0) t.emplace_back(3 * i + r, 3 * col_idx_[k] + c, blocks_[k](r, c));
  SparseMatrixXd a(rows(), cols());
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

BlockSparseBuilder::BlockSparseBuilder(Index block_rows, Index block_cols)
    : block_cols_(block_cols), rows_(block_rows) {}

void BlockSparseBuilder::add(Index i, Index j, const Mat3& value) {
  auto [it, inserted] = rows_[i].try_emplace(j, value);
  if (!inserted) it->second += value;
}

BlockSparseMatrix BlockSparseBuilder::build() const {
  std::vector<Index> row_ptr{0};
  std::vector<Index> col_idx;
  std::vector<Mat3> blocks;
  for (const auto& row : rows_) {
    for (const auto& [j, b] : row) {
      col_idx.push_back(j);
      blocks.push_back(b);
    }
    row_ptr.push_back(static_cast<Index>(col_idx.size()));
  }
  return BlockSparseMatrix(static_cast<Index>(rows_.size()), block_cols_, std::move(row_ptr), std::move(col_idx),
                           std::move(blocks));
}

DofPartition::DofPartition(std::vector<DofKind> kinds) : kinds_(std::move(kinds)), local_(kinds_.size()) {
  for (std::size_t d = 0; d < kinds_.size(); ++d) {
    auto& list = lists_[static_cast<int>(kinds_[d])];
    local_[d] = static_cast<Index>(list.size());
    list.push_back(static_cast<Index>(d));
  }
}

VectorXd DofPartition::gather(const VectorXd& full, DofKind k) const {
  if (full.size() != size()) throw ShapeError("gather: vector length does not match the partition");
  const auto& list = dofs(k);
  VectorXd out(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) out[i] = full[list[i]];
  return out;
}

void DofPartition::scatter(const VectorXd& part, DofKind k, VectorXd& full) const {
  const auto& list = dofs(k);
  if (part.size() != static_cast<Index>(list.size()) || full.size() != size()) {
    throw ShapeError("scatter: vector length does not match the partition");
  }
  for (std::size_t i = 0; i < list.size(); ++i) full[list[i]] = part[i];
}

void DofPartition::scatter_add(const VectorXd& part, DofKind k, VectorXd& full) const {
  const auto& list = dofs(k);
  if (part.size() != static_cast<Index>(list.size()) || full.size() != size()) {
    throw ShapeError("scatter: vector length does not match the partition");
  }
  for (std::size_t i = 0; i < list.size(); ++i) full[list[i]] += part[i];
}

SubOperator::SubOperator(std::shared_ptr<const LinearOperator> parent, std::shared_ptr<const DofPartition> part,
                         DofKind row_kind, DofKind col_kind)
    : parent_(std::move(parent)), part_(std::move(part)), row_kind_(row_kind), col_kind_(col_kind) {
  if (parent_->rows() != part_->size() || parent_->cols() != part_->size()) {
    throw ShapeError("sub-operator: partition size does not match the operator");
  }
  if (row_kind_ == col_kind_) symmetric_ = probe_asymmetry(*this) <= 1e-11;
}

void SubOperator::apply(const VectorXd& x, VectorXd& y) const {
  in_.setZero(part_->size());
  part_->scatter(x, col_kind_, in_);
  parent_->apply(in_, out_);
  y = part_->gather(out_, row_kind_);
}

void SubOperator::apply_transpose(const VectorXd& x, VectorXd& y) const {
  in_.setZero(part_->size());
  part_->scatter(x, row_kind_, in_);
  parent_->apply_transpose(in_, out_);
  y = part_->gather(out_, col_kind_);
}

VectorXd SubOperator::diagonal() const {
  if (row_kind_ != col_kind_) throw ShapeError("diagonal of an off-diagonal block");
  return part_->gather(parent_->diagonal(), row_kind_);
}

namespace {

std::shared_ptr<const BlockSparseMatrix> block_form(const std::shared_ptr<const LinearOperator>& op) {
  if (auto b = std::dynamic_pointer_cast<const BlockSparseMatrix>(op)) return b;
  return op->assembled();
}

}  // namespace

SparseMatrixXd SubOperator::to_sparse() const {
  auto a = block_form(parent_);
  if (!a) return LinearOperator::to_sparse();
  std::vector<Eigen::Triplet<double>> t;
  const auto& rp = a->row_ptr();
  const auto& ci = a->col_idx();
  const auto& bl = a->blocks();
  for (Index i = 0; i < a->block_rows(); ++i) {
    for (int r = 0; r < 3; ++r) {
      const Index row = 3 * i + r;
      if (part_->kind(row) != row_kind_) continue;
      for (Index k = rp[i]; k < rp[i + 1]; ++k) {
        for (int c = 0; c < 3; ++c) {
          const Index col = 3 * ci[k] + c;
          if (part_->kind(col) == col_kind_ && bl[k](r, c) != 0.0)
            t.emplace_back(part_->local(row), part_->local(col), bl[k](r, c));
        }
      }
    }
  }
  SparseMatrixXd out(rows(), cols());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

MatrixXd SubOperator::materialize() const {
  auto a = block_form(parent_);
  if (!a) return to_dense();
  MatrixXd out = MatrixXd::Zero(rows(), cols());
  const auto& rp = a->row_ptr();
  const auto& ci = a->col_idx();
  const auto& bl = a->blocks();
  for (Index i = 0; i < a->block_rows(); ++i) {
    for (Index k = rp[i]; k < rp[i + 1]; ++k) {
      for (int r = 0; r < 3; ++r) {
        const Index row = 3 * i + r;
        if (part_->kind(row) != row_kind_) continue;
        for (int c = 0; c < 3; ++c) {
          const Index col = 3 * ci[k] + c;
          if (part_->kind(col) == col_kind_) out(part_->local(row), part_->local(col)) = bl[k](r, c);
        }
      }
    }
  }
  return out;
}

DenseOperator::DenseOperator(MatrixXd a, double symmetry_tol) : a_(std::move(a)) {
  if (a_.rows() == a_.cols()) {
    const double scale = a_.cwiseAbs().maxCoeff();
    symmetric_ = scale == 0.0 || (a_ - a_.transpose()).cwiseAbs().maxCoeff() <= symmetry_tol * scale;
  }
}

}  // namespace pdc
