#include "pdc/coupling.hpp"

#include <cmath>
#include <sstream>

namespace pdc {

namespace {

class TransposeOperator final : public LinearOperator {
 public:
  explicit TransposeOperator(std::shared_ptr<const LinearOperator> a) : a_(std::move(a)) {}
  Index rows() const override { return a_->cols(); }
  Index cols() const override { return a_->rows(); }
  void apply(const VectorXd& x, VectorXd& y) const override { a_->apply_transpose(x, y); }
  void apply_transpose(const VectorXd& x, VectorXd& y) const override { a_->apply(x, y); }
  VectorXd diagonal() const override { return a_->diagonal(); }
  bool symmetric() const override { return a_->symmetric(); }
  MatrixXd materialize() const override { return a_->materialize().transpose(); }
  SparseMatrixXd to_sparse() const override { return a_->to_sparse().transpose(); }

 private:
  std::shared_ptr<const LinearOperator> a_;
};

}  // namespace

double SelectionOps::total_volume() const {
  double v = 0.0;
  for (double x : volumes) v += x;
  return v;
}

VectorXd SelectionOps::select(const VectorXd& u_n) const {
  VectorXd out(3 * size());
  for (Index s = 0; s < size(); ++s) out.segment<3>(3 * s) = u_n.segment<3>(3 * points[s]);
  return out;
}

VectorXd SelectionOps::interpolate(const VectorXd& u_l) const {
  VectorXd out = VectorXd::Zero(3 * size());
  for (Index s = 0; s < size(); ++s)
    for (int a = 0; a < 8; ++a) out.segment<3>(3 * s) += weights[s][a] * u_l.segment<3>(3 * nodes[s][a]);
  return out;
}

void SelectionOps::add_select_transpose(const VectorXd& r, VectorXd& out) const {
  for (Index s = 0; s < size(); ++s) out.segment<3>(3 * points[s]) += r.segment<3>(3 * s);
}

void SelectionOps::add_interpolate_transpose(const VectorXd& r, VectorXd& out) const {
  for (Index s = 0; s < size(); ++s)
    for (int a = 0; a < 8; ++a) out.segment<3>(3 * nodes[s][a]) += weights[s][a] * r.segment<3>(3 * s);
}

SelectionOps build_selection_ops(const PointCloud& cloud, const HexMesh& mesh, bool include_control_points) {
  SelectionOps ops;
  ops.num_points = cloud.size();
  ops.num_nodes = mesh.num_nodes();
  for (Index p = 0; p < cloud.size(); ++p) {
    if (!cloud.overlap[p]) continue;
    if (cloud.tags[p] == Region::Dirichlet) continue;
    if (cloud.tags[p] == Region::Control && !include_control_points) continue;
    MeshLocation loc;
    try {
      loc = locate_in_mesh(mesh, cloud.positions[p]);
    } catch (const LocationError&) {
      throw CoverageError(p, "overlap point " + format_point(cloud.positions[p]) + " lies outside the local mesh");
    }
    const auto n = hex_shape_values(loc.reference);
    std::array<double, 8> w{};
    for (int a = 0; a < 8; ++a) w[a] = std::clamp(n[a], 0.0, 1.0);
    ops.points.push_back(p);
    ops.nodes.push_back(mesh.cells[loc.cell]);
    ops.weights.push_back(w);
    ops.volumes.push_back(cloud.volumes[p]);
  }
  return ops;
}

StateModel::StateModel(std::string name, std::shared_ptr<const LinearOperator> op,
                       std::shared_ptr<const DofPartition> part, VectorXd load, VectorXd data, const SolverConfig& cfg)
    : name_(std::move(name)), op_(std::move(op)), part_(std::move(part)), load_(std::move(load)), data_(std::move(data)) {
  if (op_->rows() != part_->size() || load_.size() != part_->size() || data_.size() != part_->size()) {
    throw ShapeError(name_ + " model: operator, partition, load and data sizes differ");
  }
  a_ii_ = std::make_shared<SubOperator>(op_, part_, DofKind::Free, DofKind::Free);
  a_ic_ = std::make_shared<SubOperator>(op_, part_, DofKind::Free, DofKind::Control);
  try {
    solver_ = std::make_unique<LinearSolver>(a_ii_, cfg);
  } catch (const DispatchError& e) {
    throw DispatchError(name_ + " model: " + e.what());
  }
  if (!a_ii_->symmetric()) {
    transpose_solver_ = std::make_unique<LinearSolver>(std::make_shared<TransposeOperator>(a_ii_), cfg);
  }
  VectorXd lift = VectorXd::Zero(part_->size());
  part_->scatter(part_->gather(data_, DofKind::Fixed), DofKind::Fixed, lift);
  VectorXd alift;
  op_->apply(lift, alift);
  rhs0_ = part_->gather(load_ - alift, DofKind::Free);
}

VectorXd StateModel::solve_free(const VectorXd& rhs) const {
  ++solves_;
  try {
    return solver_->solve(rhs);
  } catch (const SolverError& e) {
    throw SolverError(e.residual_history(), name_ + " state solve failed: " + e.what());
  }
}

VectorXd StateModel::solve_free_transpose(const VectorXd& rhs) const {
  ++solves_;
  const LinearSolver& s = transpose_solver_ ? *transpose_solver_ : *solver_;
  try {
    return s.solve(rhs);
  } catch (const SolverError& e) {
    throw SolverError(e.residual_history(), name_ + " adjoint solve failed: " + e.what());
  }
}

VectorXd StateModel::solve(const VectorXd& control) const {
  if (control.size() != num_controls()) throw ShapeError(name_ + " model: control length mismatch");
  VectorXd rhs = rhs0_;
  if (control.size() > 0) rhs -= (*a_ic_) * control;
  VectorXd u = VectorXd::Zero(part_->size());
  part_->scatter(part_->gather(data_, DofKind::Fixed), DofKind::Fixed, u);
  part_->scatter(control, DofKind::Control, u);
  part_->scatter(solve_free(rhs), DofKind::Free, u);
  return u;
}

VectorXd StateModel::response(const VectorXd& control) const {
  if (control.size() != num_controls()) throw ShapeError(name_ + " model: control length mismatch");
  VectorXd u = VectorXd::Zero(part_->size());
  if (control.size() == 0) return u;
  part_->scatter(control, DofKind::Control, u);
  part_->scatter(solve_free(-((*a_ic_) * control)), DofKind::Free, u);
  return u;
}

VectorXd StateModel::pullback(const VectorXd& q) const {
  VectorXd g = part_->gather(q, DofKind::Control);
  if (g.size() == 0) return g;
  const VectorXd lambda = solve_free_transpose(part_->gather(q, DofKind::Free));
  VectorXd t;
  a_ic_->apply_transpose(lambda, t);
  return g - t;
}

CouplingProblem::CouplingProblem(std::shared_ptr<StateModel> nonlocal, std::shared_ptr<StateModel> local,
                                 SelectionOps selection)
    : nonlocal_(std::move(nonlocal)), local_(std::move(local)), selection_(std::move(selection)) {
  if (3 * selection_.num_points != nonlocal_->partition().size() ||
      3 * selection_.num_nodes != local_->partition().size()) {
    throw ShapeError("selection operators do not match the state models");
  }
}

VectorXd CouplingProblem::join(const VectorXd& nu_n, const VectorXd& nu_l) const {
  VectorXd nu(nu_n.size() + nu_l.size());
  nu << nu_n, nu_l;
  return nu;
}

States CouplingProblem::solve_states(const VectorXd& nu) const {
  if (nu.size() != control_size()) throw ShapeError("control vector length mismatch");
  // The two systems are independent.
  return {nonlocal_->solve(nonlocal_part(nu)), local_->solve(local_part(nu))};
}

VectorXd CouplingProblem::residual(const States& s) const {
  return selection_.select(s.nonlocal) - selection_.interpolate(s.local);
}

double CouplingProblem::objective_of_residual(const VectorXd& r) const {
  double j = 0.0;
  for (Index i = 0; i < selection_.size(); ++i) j += selection_.volumes[i] * r.segment<3>(3 * i).squaredNorm();
  return 0.5 * j;
}

double CouplingProblem::objective(const States& s) const { return objective_of_residual(residual(s)); }

VectorXd CouplingProblem::gradient_of_residual(const VectorXd& r) const {
  VectorXd wr = r;
  for (Index i = 0; i < selection_.size(); ++i) wr.segment<3>(3 * i) *= selection_.volumes[i];
  VectorXd qn = VectorXd::Zero(nonlocal_->partition().size());
  VectorXd ql = VectorXd::Zero(local_->partition().size());
  selection_.add_select_transpose(wr, qn);
  selection_.add_interpolate_transpose(-wr, ql);
  return join(nonlocal_->pullback(qn), local_->pullback(ql));
}

VectorXd CouplingProblem::gradient(const States& s) const { return gradient_of_residual(residual(s)); }

VectorXd CouplingProblem::trace(const VectorField& u, const PointCloud& cloud, const HexMesh& mesh) const {
  const auto& cn = nonlocal_->partition().dofs(DofKind::Control);
  const auto& cl = local_->partition().dofs(DofKind::Control);
  VectorXd nu(cn.size() + cl.size());
  for (std::size_t k = 0; k < cn.size(); ++k) nu[k] = u(cloud.positions[cn[k] / 3])[cn[k] % 3];
  for (std::size_t k = 0; k < cl.size(); ++k) nu[cn.size() + k] = u(mesh.nodes[cl[k] / 3])[cl[k] % 3];
  return nu;
}

namespace {

class AffineLine final : public LineFunction {
 public:
  AffineLine(const CouplingProblem& problem, const VectorXd& r, const VectorXd& mp, const VectorXd& g)
      : problem_(problem), r_(r), mp_(mp), g_(g) {}

  double value(double a) override { return problem_.objective_of_residual(r_ + a * mp_); }
  double slope(double a) override {
    const VectorXd ra = r_ + a * mp_;
    double d = 0.0;
    const auto& v = problem_.selection().volumes;
    for (std::size_t i = 0; i < v.size(); ++i) d += v[i] * ra.segment<3>(3 * i).dot(mp_.segment<3>(3 * i));
    return d;
  }
  VectorXd gradient(double a) override {
    if (hp_.size() == 0) hp_ = problem_.gradient_of_residual(mp_);
    return g_ + a * hp_;
  }
  int evaluations() const override { return 1; }

 private:
  const CouplingProblem& problem_;
  const VectorXd& r_;
  const VectorXd& mp_;
  VectorXd g_;
  VectorXd hp_;
};

}  // namespace

double ReducedObjective::evaluate(const VectorXd& x, VectorXd& grad) {
  states_ = problem_.solve_states(x);
  residual_ = problem_.residual(states_);
  grad = problem_.gradient_of_residual(residual_);
  return problem_.objective_of_residual(residual_);
}

std::unique_ptr<LineFunction> ReducedObjective::line(const VectorXd& /*x*/, double /*f*/, const VectorXd& g,
                                                     const VectorXd& p) {
  direction_states_ = {problem_.nonlocal().response(problem_.nonlocal_part(p)),
                       problem_.local().response(problem_.local_part(p))};
  direction_residual_ = problem_.residual(direction_states_);
  return std::make_unique<AffineLine>(problem_, residual_, direction_residual_, g);
}

void ReducedObjective::accept(const VectorXd& /*x_new*/, double a) {
  states_.nonlocal += a * direction_states_.nonlocal;
  states_.local += a * direction_states_.local;
  residual_ += a * direction_residual_;
}

CouplingResult optimize(const CouplingProblem& problem, const VectorXd& nu0, const OptimizerConfig& cfg) {
  ReducedObjective obj(problem);
  CouplingResult out;
  const Index before = problem.nonlocal().solve_count() + problem.local().solve_count();
  out.optimization = lbfgs(obj, nu0, cfg);
  out.control = out.optimization.x;
  out.states = problem.solve_states(out.control);
  out.objective = problem.objective(out.states);
  const double vol = problem.selection().total_volume();
  out.mismatch_rms = vol > 0.0 ? std::sqrt(2.0 * out.objective / vol) : 0.0;
  out.solves = problem.nonlocal().solve_count() + problem.local().solve_count() - before;
  return out;
}

CompositeSolution composite_solution(const States& states, const PointCloud& cloud, const HexMesh& mesh,
                                     const BoxUnion& overlap, double objective, double total_sample_volume) {
  CompositeSolution c;
  for (Index p = 0; p < cloud.size(); ++p) {
    if (cloud.tags[p] == Region::Dirichlet) continue;
    c.nonlocal_points.push_back(p);
    c.nonlocal_values.push_back(states.nonlocal.segment<3>(3 * p));
  }
  const double tol = 1e-9 * mesh.spacing;
  for (Index n = 0; n < mesh.num_nodes(); ++n) {
    if (overlap.contains(mesh.nodes[n], tol)) {
      c.overlap_nodes.push_back(n);
      c.overlap_values.push_back(states.local.segment<3>(3 * n));
    } else {
      c.local_nodes.push_back(n);
      c.local_values.push_back(states.local.segment<3>(3 * n));
    }
  }
  c.mismatch_rms = total_sample_volume > 0.0 ? std::sqrt(2.0 * objective / total_sample_volume) : 0.0;
  return c;
}

std::shared_ptr<StateModel> build_nonlocal_model(const NonlocalSpec& spec, const SolverConfig& cfg,
                                                 std::shared_ptr<const LpsOperator>* op_out) {
  const PointCloud& cloud = *spec.cloud;
  std::vector<Index> rows;
  std::vector<DofKind> kinds(3 * cloud.size());
  VectorXd load = VectorXd::Zero(3 * cloud.size());
  VectorXd data = VectorXd::Zero(3 * cloud.size());
  for (Index p = 0; p < cloud.size(); ++p) {
    DofKind k = DofKind::Free;
    switch (cloud.tags[p]) {
      case Region::Interior:
        rows.push_back(p);
        if (spec.body_force) load.segment<3>(3 * p) = spec.body_force(cloud.positions[p]);
        break;
      case Region::Control: k = DofKind::Control; break;
      case Region::Dirichlet:
        k = DofKind::Fixed;
        if (spec.data) data.segment<3>(3 * p) = spec.data(cloud.positions[p]);
        break;
    }
    for (int c = 0; c < 3; ++c) kinds[3 * p + c] = k;
  }
  LpsOptions opts;
  opts.rows = rows;
  opts.body = spec.body;
  auto op = std::make_shared<const LpsOperator>(cloud, *spec.family, spec.params, spec.kappa, opts);
  if (op_out) *op_out = op;
  auto part = std::make_shared<const DofPartition>(std::move(kinds));
  return std::make_shared<StateModel>("nonlocal", op, part, std::move(load), std::move(data), cfg);
}

std::shared_ptr<StateModel> build_local_model(const LocalSpec& spec, const SolverConfig& cfg,
                                              std::shared_ptr<const BlockSparseMatrix>* stiffness_out) {
  const HexMesh& mesh = *spec.mesh;
  spec.loads.validate(mesh);
  auto k = std::make_shared<const BlockSparseMatrix>(assemble_stiffness(mesh, spec.params));
  if (stiffness_out) *stiffness_out = k;
  VectorXd load = assemble_body_load(mesh, spec.loads.body);
  for (const TractionSpec& t : spec.loads.tractions) load += assemble_traction_load(mesh, t.face_set, t.traction);
  const VectorXd g = dirichlet_values(mesh, spec.loads);
  std::vector<DofKind> kinds(g.size(), DofKind::Free);
  VectorXd data = VectorXd::Zero(g.size());
  for (Index d = 0; d < g.size(); ++d) {
    if (!std::isnan(g[d])) {
      kinds[d] = DofKind::Fixed;
      data[d] = g[d];
    }
  }
  auto it = mesh.node_sets.find(spec.control_set);
  if (it != mesh.node_sets.end()) {
    for (Index n : it->second)
      for (int c = 0; c < 3; ++c)
        if (kinds[3 * n + c] == DofKind::Free) kinds[3 * n + c] = DofKind::Control;
  }
  auto part = std::make_shared<const DofPartition>(std::move(kinds));
  return std::make_shared<StateModel>("local", k, part, std::move(load), std::move(data), cfg);
}

}  // namespace pdc
