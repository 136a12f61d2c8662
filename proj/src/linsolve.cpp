#include "pdc/linsolve.hpp"

#include <Eigen/CholmodSupport>
#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>

namespace pdc {

// Supernodal Cholesky for SPD systems, sparse LU otherwise.
struct LinearSolver::SparseFactor {
  std::unique_ptr<Eigen::CholmodSupernodalLLT<SparseMatrixXd>> llt;
  std::unique_ptr<Eigen::SparseLU<SparseMatrixXd, Eigen::COLAMDOrdering<int>>> lu;

  VectorXd solve(const VectorXd& b) const { return llt ? VectorXd(llt->solve(b)) : VectorXd(lu->solve(b)); }
};

const char* to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::CgJacobi: return "cg-jacobi";
    case SolverMethod::DenseDirect: return "dense-direct";
    case SolverMethod::GeneralIterative: return "general-iterative";
    case SolverMethod::SparseDirect: return "sparse-direct";
  }
  return "?";
}

SolverMethod solver_method_from_string(const std::string& s) {
  if (s == "cg-jacobi") return SolverMethod::CgJacobi;
  if (s == "dense-direct") return SolverMethod::DenseDirect;
  if (s == "general-iterative") return SolverMethod::GeneralIterative;
  if (s == "sparse-direct") return SolverMethod::SparseDirect;
  throw ParameterError("unknown solver method '" + s + "'");
}

void SolverConfig::validate() const {
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw ParameterError("solver tolerance must lie in (0, 1)");
  if (max_iterations < 1) throw ParameterError("solver max_iterations must be at least 1");
}

namespace {

// Non-owning shared_ptr for the one-shot wrapper.
std::shared_ptr<const LinearOperator> borrow(const LinearOperator& a) {
  return std::shared_ptr<const LinearOperator>(&a, [](const LinearOperator*) {});
}

}  // namespace

LinearSolver::LinearSolver(std::shared_ptr<const LinearOperator> op, SolverConfig cfg)
    : op_(std::move(op)), cfg_(cfg) {
  cfg_.validate();
  if (op_->rows() != op_->cols()) throw ShapeError("solver requires a square operator");
  switch (cfg_.method) {
    case SolverMethod::CgJacobi:
      if (!op_->symmetric()) throw DispatchError("cg-jacobi requested for an operator that failed the symmetry check");
      inv_diag_ = inverse_diagonal();
      break;
    case SolverMethod::GeneralIterative:
      inv_diag_ = inverse_diagonal();
      break;
    case SolverMethod::DenseDirect: {
      dense_ = op_->materialize();
      if (op_->symmetric()) {
        llt_ = std::make_unique<Eigen::LLT<MatrixXd>>(dense_);
        if (llt_->info() != Eigen::Success) llt_.reset();
      }
      if (!llt_) lu_ = std::make_unique<Eigen::PartialPivLU<MatrixXd>>(dense_);
      break;
    }
    case SolverMethod::SparseDirect: {
      sparse_ = std::make_shared<SparseFactor>();
      SparseMatrixXd a = op_->to_sparse();
      a.makeCompressed();
      if (op_->symmetric()) {
        sparse_->llt = std::make_unique<Eigen::CholmodSupernodalLLT<SparseMatrixXd>>(a);
        if (sparse_->llt->info() != Eigen::Success) sparse_->llt.reset();
      }
      if (!sparse_->llt) {
        sparse_->lu = std::make_unique<Eigen::SparseLU<SparseMatrixXd, Eigen::COLAMDOrdering<int>>>();
        sparse_->lu->compute(a);
        if (sparse_->lu->info() != Eigen::Success)
          throw SolverError({}, "sparse-direct: factorization failed (singular system?)");
      }
      break;
    }
  }
}

VectorXd LinearSolver::inverse_diagonal() const {
  VectorXd d = op_->diagonal();
  for (Index i = 0; i < d.size(); ++i) d[i] = (d[i] != 0.0 && std::isfinite(d[i])) ? 1.0 / std::abs(d[i]) : 1.0;
  return d;
}

VectorXd LinearSolver::solve(const VectorXd& b, SolveReport* report, const VectorXd* x0) const {
  if (b.size() != op_->rows()) throw ShapeError("solve: right-hand side length mismatch");
  SolveReport local;
  SolveReport& rep = report ? *report : local;
  rep = SolveReport{};
  if (b.size() == 0 || b.norm() == 0.0) {
    rep.history.push_back(0.0);
    return VectorXd::Zero(b.size());
  }
  const VectorXd start = (x0 && x0->size() == b.size()) ? *x0 : VectorXd::Zero(b.size());
  switch (cfg_.method) {
    case SolverMethod::CgJacobi: return solve_cg(b, start, rep);
    case SolverMethod::GeneralIterative: return solve_bicgstab(b, start, rep);
    case SolverMethod::DenseDirect: return solve_dense(b, rep);
    case SolverMethod::SparseDirect: return solve_sparse(b, rep);
  }
  return {};
}

VectorXd LinearSolver::solve_cg(const VectorXd& b, const VectorXd& x0, SolveReport& rep) const {
  const double bnorm = b.norm();
  VectorXd x = x0, r, z, p, ap;
  op_->apply(x, ap);
  r = b - ap;
  // Restarts from the true residual guard against recursion drift.
  for (int restart = 0; restart < 4; ++restart) {
    z = inv_diag_.cwiseProduct(r);
    p = z;
    double rz = r.dot(z);
    double rel = r.norm() / bnorm;
    rep.history.push_back(rel);
    while (rel > cfg_.tolerance && rep.iterations < cfg_.max_iterations) {
      op_->apply(p, ap);
      const double pap = p.dot(ap);
      if (!(pap > 0.0)) break;
      const double step = rz / pap;
      x += step * p;
      r -= step * ap;
      z = inv_diag_.cwiseProduct(r);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
      rel = r.norm() / bnorm;
      rep.history.push_back(rel);
      ++rep.iterations;
    }
    op_->apply(x, ap);
    r = b - ap;
    rep.residual = r.norm() / bnorm;
    if (rep.residual <= cfg_.tolerance) return x;
    if (rep.iterations >= cfg_.max_iterations) break;
  }
  std::ostringstream os;
  os << "cg-jacobi did not converge: relative residual " << rep.residual << " after " << rep.iterations
     << " iterations (tolerance " << cfg_.tolerance << ")";
  throw SolverError(rep.history, os.str());
}

VectorXd LinearSolver::solve_bicgstab(const VectorXd& b, const VectorXd& x0, SolveReport& rep) const {
  const double bnorm = b.norm();
  VectorXd x = x0, ax;
  op_->apply(x, ax);
  VectorXd r = b - ax;
  for (int restart = 0; restart < 4; ++restart) {
    const VectorXd r0 = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    VectorXd v = VectorXd::Zero(b.size()), p = VectorXd::Zero(b.size()), s, t, y, zs;
    double rel = r.norm() / bnorm;
    rep.history.push_back(rel);
    while (rel > cfg_.tolerance && rep.iterations < cfg_.max_iterations) {
      const double rho_new = r0.dot(r);
      if (rho_new == 0.0 || omega == 0.0) break;
      const double beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      p = r + beta * (p - omega * v);
      y = inv_diag_.cwiseProduct(p);
      op_->apply(y, v);
      const double r0v = r0.dot(v);
      if (r0v == 0.0) break;
      alpha = rho / r0v;
      s = r - alpha * v;
      zs = inv_diag_.cwiseProduct(s);
      op_->apply(zs, t);
      const double tt = t.dot(t);
      omega = tt > 0.0 ? t.dot(s) / tt : 0.0;
      x += alpha * y + omega * zs;
      r = s - omega * t;
      rel = r.norm() / bnorm;
      rep.history.push_back(rel);
      ++rep.iterations;
    }
    op_->apply(x, ax);
    r = b - ax;
    rep.residual = r.norm() / bnorm;
    if (rep.residual <= cfg_.tolerance) return x;
    if (rep.iterations >= cfg_.max_iterations) break;
  }
  std::ostringstream os;
  os << "general-iterative solve did not converge: relative residual " << rep.residual << " after "
     << rep.iterations << " iterations (tolerance " << cfg_.tolerance << ")";
  throw SolverError(rep.history, os.str());
}

VectorXd LinearSolver::solve_dense(const VectorXd& b, SolveReport& rep) const {
  const double bnorm = b.norm();
  auto direct = [&](const VectorXd& rhs) -> VectorXd {
    if (llt_) return llt_->solve(rhs);
    return lu_->solve(rhs);
  };
  VectorXd x = direct(b);
  // A few steps of iterative refinement tighten ill-conditioned solves.
  for (int k = 0; k < 3; ++k) {
    const VectorXd r = b - dense_ * x;
    rep.residual = r.norm() / bnorm;
    rep.history.push_back(rep.residual);
    if (rep.residual <= cfg_.tolerance) return x;
    x += direct(r);
    ++rep.iterations;
  }
  rep.residual = (b - dense_ * x).norm() / bnorm;
  rep.history.push_back(rep.residual);
  if (rep.residual <= cfg_.tolerance) return x;
  std::ostringstream os;
  os << "dense-direct solve left relative residual " << rep.residual << " above tolerance " << cfg_.tolerance;
  throw SolverError(rep.history, os.str());
}

VectorXd LinearSolver::solve_sparse(const VectorXd& b, SolveReport& rep) const {
  const double bnorm = b.norm();
  VectorXd x = sparse_->solve(b), ax;
  for (int k = 0;; ++k) {
    // Matrix-free residual: cheaper than the assembled product for nonlocal operators.
    op_->apply(x, ax);
    const VectorXd r = b - ax;
    rep.residual = r.norm() / bnorm;
    rep.history.push_back(rep.residual);
    if (rep.residual <= cfg_.tolerance || k == 3) break;
    x += sparse_->solve(r);
    ++rep.iterations;
  }
  if (rep.residual <= cfg_.tolerance) return x;
  std::ostringstream os;
  os << "sparse-direct solve left relative residual " << rep.residual << " above tolerance " << cfg_.tolerance;
  throw SolverError(rep.history, os.str());
}

VectorXd solve(const LinearOperator& a, const VectorXd& b, const SolverConfig& cfg, SolveReport* report) {
  return LinearSolver(borrow(a), cfg).solve(b, report);
}

}  // namespace pdc
