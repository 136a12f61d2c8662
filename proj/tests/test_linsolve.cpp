#include "helpers.hpp"
#include "pdc/linsolve.hpp"
#include "pdc/optimizer.hpp"

#include <doctest.h>

using namespace pdc;
using pdc::test::random_field;

namespace {

MatrixXd random_spd(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  MatrixXd b(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) b(i, j) = d(rng);
  return b * b.transpose() + double(n) * MatrixXd::Identity(n, n);
}

SolverConfig config(SolverMethod m, double tol = 1e-12) {
  SolverConfig c;
  c.method = m;
  c.tolerance = tol;
  return c;
}

// Convex quadratic 0.5 (x - x*)^T A (x - x*), nonnegative like the coupling functional.
class Quadratic final : public Objective {
 public:
  Quadratic(MatrixXd a, VectorXd xs) : a_(std::move(a)), xs_(std::move(xs)) {}
  Index size() const override { return xs_.size(); }
  double evaluate(const VectorXd& x, VectorXd& grad) override {
    grad = a_ * (x - xs_);
    return 0.5 * (x - xs_).dot(grad);
  }

 private:
  MatrixXd a_;
  VectorXd xs_;
};

class Rosenbrock final : public Objective {
 public:
  Index size() const override { return 2; }
  double evaluate(const VectorXd& x, VectorXd& g) override {
    g.resize(2);
    g[0] = -2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] * x[0]);
    g[1] = 200 * (x[1] - x[0] * x[0]);
    return (1 - x[0]) * (1 - x[0]) + 100 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]);
  }
};

}  // namespace

TEST_CASE("identity and diagonal systems") {
  const VectorXd b = random_field(30, 1);
  for (SolverMethod m : {SolverMethod::CgJacobi, SolverMethod::DenseDirect, SolverMethod::GeneralIterative,
                         SolverMethod::SparseDirect}) {
    CAPTURE(to_string(m));
    const DenseOperator id(MatrixXd::Identity(30, 30));
    CHECK((solve(id, b, config(m)) - b).cwiseAbs().maxCoeff() <= 1e-15);
    VectorXd d(30);
    for (Index i = 0; i < 30; ++i) d[i] = 1.0 + i;
    const DenseOperator diag(MatrixXd(d.asDiagonal()));
    const VectorXd x = solve(diag, b, config(m, 1e-14));
    CHECK((x - b.cwiseQuotient(d)).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("every method agrees with the dense factorization on a random SPD system") {
  const MatrixXd a = random_spd(50, 3);
  const VectorXd b = random_field(50, 4);
  const VectorXd ref = a.llt().solve(b);
  const DenseOperator op(a);
  for (SolverMethod m : {SolverMethod::CgJacobi, SolverMethod::DenseDirect, SolverMethod::GeneralIterative,
                         SolverMethod::SparseDirect}) {
    CAPTURE(to_string(m));
    SolveReport rep;
    const VectorXd x = solve(op, b, config(m), &rep);
    CHECK((x - ref).norm() <= 1e-9 * ref.norm());
    CHECK(rep.residual <= 1e-12);
    CHECK(!rep.history.empty());
  }
}

TEST_CASE("nonsymmetric operators") {
  MatrixXd a = random_spd(40, 5);
  a(0, 5) += 3.0;
  const DenseOperator op(a);
  CHECK_FALSE(op.symmetric());
  const VectorXd b = random_field(40, 6);
  CHECK_THROWS_AS(LinearSolver(std::make_shared<DenseOperator>(a), config(SolverMethod::CgJacobi)), DispatchError);
  const VectorXd ref = a.partialPivLu().solve(b);
  for (SolverMethod m : {SolverMethod::DenseDirect, SolverMethod::GeneralIterative, SolverMethod::SparseDirect}) {
    CAPTURE(to_string(m));
    CHECK((solve(op, b, config(m)) - ref).norm() <= 1e-9 * ref.norm());
  }
}

TEST_CASE("iteration cap raises with the residual history") {
  const DenseOperator op(random_spd(60, 7));
  SolverConfig c = config(SolverMethod::CgJacobi, 1e-14);
  c.max_iterations = 2;
  try {
    solve(op, random_field(60, 8), c);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.residual_history().size() >= 2);
  }
}

TEST_CASE("singular system fails in the direct sparse factorization") {
  MatrixXd a = MatrixXd::Zero(6, 6);
  a.topLeftCorner(3, 3) = MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(solve(DenseOperator(a), VectorXd::Ones(6), config(SolverMethod::SparseDirect)), SolverError);
}

TEST_CASE("solver method names round-trip") {
  for (SolverMethod m : {SolverMethod::CgJacobi, SolverMethod::DenseDirect, SolverMethod::GeneralIterative,
                         SolverMethod::SparseDirect})
    CHECK(solver_method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(solver_method_from_string("multigrid"), ParameterError);
}

TEST_CASE("block sparse matrix, partition and sub-operators") {
  BlockSparseBuilder builder(3, 3);
  Mat3 m1 = Mat3::Identity() * 4.0, off;
  off << 1, 2, 0, 0, 1, 0, 0.5, 0, 1;
  builder.add(0, 0, m1);
  builder.add(1, 1, m1);
  builder.add(2, 2, m1);
  builder.add(0, 2, off);
  builder.add(2, 0, off.transpose());
  builder.add(0, 0, Mat3::Identity());
  const BlockSparseMatrix a = builder.build();
  CHECK(a.num_blocks() == 5);
  CHECK(a.block(0, 1) == nullptr);
  CHECK(a.block(0, 0)->isApprox(Mat3::Identity() * 5.0));
  CHECK(a.asymmetry() == 0.0);
  CHECK(a.pattern_symmetric());
  const MatrixXd dense = a.dense();
  CHECK((MatrixXd(a.to_sparse()) - dense).norm() == 0.0);
  const VectorXd x = random_field(9, 2);
  CHECK((a * x - dense * x).norm() <= 1e-14);

  std::vector<DofKind> kinds(9, DofKind::Free);
  kinds[1] = DofKind::Control;
  kinds[4] = DofKind::Fixed;
  kinds[8] = DofKind::Control;
  auto part = std::make_shared<DofPartition>(kinds);
  CHECK(part->count(DofKind::Free) == 6);
  CHECK(part->local(8) == 1);
  VectorXd full = VectorXd::Zero(9);
  part->scatter(part->gather(x, DofKind::Control), DofKind::Control, full);
  CHECK(full[1] == x[1]);
  CHECK(full[8] == x[8]);
  CHECK(full[0] == 0.0);

  auto shared = std::make_shared<BlockSparseMatrix>(a);
  const SubOperator ic(shared, part, DofKind::Free, DofKind::Control);
  const MatrixXd ic_dense = ic.materialize();
  for (Index r = 0; r < ic.rows(); ++r)
    for (Index c = 0; c < ic.cols(); ++c)
      CHECK(ic_dense(r, c) == dense(part->dofs(DofKind::Free)[r], part->dofs(DofKind::Control)[c]));
  CHECK((MatrixXd(ic.to_sparse()) - ic_dense).norm() == 0.0);
  CHECK((ic.to_dense() - ic_dense).norm() == 0.0);
  const VectorXd y = random_field(ic.rows(), 5);
  VectorXd t;
  ic.apply_transpose(y, t);
  CHECK((t - ic_dense.transpose() * y).norm() <= 1e-14);
  CHECK(SubOperator(shared, part, DofKind::Free, DofKind::Free).symmetric());
}

TEST_CASE("LBFGS on a convex quadratic") {
  const MatrixXd a = random_spd(20, 11);
  const VectorXd xs = random_field(20, 12);
  Quadratic q(a, xs);
  OptimizerConfig cfg;
  cfg.gradient_tolerance = 1e-12;
  cfg.objective_tolerance = 1e-30;
  const OptimizeResult r = lbfgs(q, VectorXd::Zero(20), cfg);
  CHECK(r.converged);
  CHECK((r.x - xs).norm() <= 1e-9);
  for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k].objective <= r.history[k - 1].objective);
}

TEST_CASE("LBFGS on the Rosenbrock function") {
  Rosenbrock f;
  OptimizerConfig cfg;
  cfg.gradient_tolerance = 1e-10;
  cfg.objective_tolerance = 1e-30;
  cfg.max_iterations = 500;
  const OptimizeResult r = lbfgs(f, Eigen::Vector2d(-1.2, 1.0), cfg);
  CHECK(r.converged);
  CHECK((r.x - Eigen::Vector2d(1, 1)).norm() <= 1e-6);
  for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k].objective <= r.history[k - 1].objective);
}

TEST_CASE("iteration limit is reported, not hidden") {
  Rosenbrock f;
  OptimizerConfig cfg;
  cfg.max_iterations = 3;
  const OptimizeResult r = lbfgs(f, Eigen::Vector2d(-1.2, 1.0), cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.reason == "iteration limit");
}

TEST_CASE("optimizer configuration is validated") {
  OptimizerConfig cfg;
  cfg.c1 = 0.95;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = OptimizerConfig{};
  cfg.memory = 0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
}
