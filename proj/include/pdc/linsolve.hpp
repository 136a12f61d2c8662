#pragma once

#include "pdc/sparse.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <memory>
#include <string>

namespace pdc {

enum class SolverMethod { CgJacobi, DenseDirect, GeneralIterative, SparseDirect };

const char* to_string(SolverMethod m);
SolverMethod solver_method_from_string(const std::string& s);

struct SolverConfig {
  SolverMethod method = SolverMethod::CgJacobi;
  double tolerance = 1e-10;
  Index max_iterations = 20000;

  void validate() const;
};

struct SolveReport {
  Index iterations = 0;
  double residual = 0.0;  // final ||Ax - b|| / ||b||
  std::vector<double> history;
};

/// Solver bound to one operator. Direct factorizations are computed once.
class LinearSolver {
 public:
  LinearSolver(std::shared_ptr<const LinearOperator> op, SolverConfig cfg);

  /// Solves A x = b. `x0` seeds the iterative methods.
  VectorXd solve(const VectorXd& b, SolveReport* report = nullptr, const VectorXd* x0 = nullptr) const;
  const LinearOperator& op() const { return *op_; }
  const SolverConfig& config() const { return cfg_; }

 private:
  VectorXd solve_cg(const VectorXd& b, const VectorXd& x0, SolveReport& rep) const;
  VectorXd solve_bicgstab(const VectorXd& b, const VectorXd& x0, SolveReport& rep) const;
  VectorXd solve_dense(const VectorXd& b, SolveReport& rep) const;
  VectorXd solve_sparse(const VectorXd& b, SolveReport& rep) const;
  VectorXd inverse_diagonal() const;

  std::shared_ptr<const LinearOperator> op_;
  SolverConfig cfg_;
  VectorXd inv_diag_;
  std::unique_ptr<Eigen::LLT<MatrixXd>> llt_;
  std::unique_ptr<Eigen::PartialPivLU<MatrixXd>> lu_;
  MatrixXd dense_;
  struct SparseFactor;
  std::shared_ptr<SparseFactor> sparse_;
};

/// One-shot convenience wrapper.
VectorXd solve(const LinearOperator& a, const VectorXd& b, const SolverConfig& cfg, SolveReport* report = nullptr);

}  // namespace pdc
