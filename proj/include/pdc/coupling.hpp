#pragma once

#include "pdc/fem.hpp"
#include "pdc/geometry.hpp"
#include "pdc/linsolve.hpp"
#include "pdc/lps.hpp"
#include "pdc/optimizer.hpp"

#include <memory>
#include <optional>

namespace pdc {

/// Overlap sampling: S_n picks nonlocal points, S_l interpolates local nodal values.
struct SelectionOps {
  std::vector<Index> points;
  std::vector<std::array<Index, 8>> nodes;
  std::vector<std::array<double, 8>> weights;
  std::vector<double> volumes;  // V~_i
  Index num_points = 0;         // nonlocal points in the cloud
  Index num_nodes = 0;          // local mesh nodes

  Index size() const { return static_cast<Index>(points.size()); }
  double total_volume() const;
  VectorXd select(const VectorXd& u_n) const;
  VectorXd interpolate(const VectorXd& u_l) const;
  /// out += S_n^T r
  void add_select_transpose(const VectorXd& r, VectorXd& out) const;
  /// out += S_l^T r
  void add_interpolate_transpose(const VectorXd& r, VectorXd& out) const;
};

/// Samples every overlap-flagged point. Control-tagged points are skipped
/// unless `include_control_points` is set.
SelectionOps build_selection_ops(const PointCloud& cloud, const HexMesh& mesh, bool include_control_points = true);

/// One partitioned state system A u = b with u_C = control and u_D = data.
class StateModel {
 public:
  StateModel(std::string name, std::shared_ptr<const LinearOperator> op, std::shared_ptr<const DofPartition> part,
             VectorXd load, VectorXd data, const SolverConfig& cfg);

  const std::string& name() const { return name_; }
  const DofPartition& partition() const { return *part_; }
  const LinearOperator& op() const { return *op_; }
  std::shared_ptr<const LinearOperator> op_ptr() const { return op_; }
  const VectorXd& load() const { return load_; }
  const VectorXd& data() const { return data_; }
  Index num_controls() const { return part_->count(DofKind::Control); }

  /// Full-length state for the given control values.
  VectorXd solve(const VectorXd& control) const;
  /// Response to a control perturbation with zero load and data.
  VectorXd response(const VectorXd& control) const;
  /// Gradient contribution q_C - A_IC^T A_II^{-T} q_I for a full-length sensitivity q.
  VectorXd pullback(const VectorXd& q) const;

  Index solve_count() const { return solves_; }

 private:
  VectorXd solve_free(const VectorXd& rhs) const;
  VectorXd solve_free_transpose(const VectorXd& rhs) const;

  std::string name_;
  std::shared_ptr<const LinearOperator> op_;
  std::shared_ptr<const DofPartition> part_;
  VectorXd load_;
  VectorXd data_;
  std::shared_ptr<const LinearOperator> a_ii_;
  std::shared_ptr<const LinearOperator> a_ic_;
  std::unique_ptr<LinearSolver> solver_;
  std::unique_ptr<LinearSolver> transpose_solver_;
  VectorXd rhs0_;
  mutable Index solves_ = 0;
};

struct States {
  VectorXd nonlocal;
  VectorXd local;
};

/// Partitioned nonlocal and local systems plus the overlap objective.
class CouplingProblem {
 public:
  CouplingProblem(std::shared_ptr<StateModel> nonlocal, std::shared_ptr<StateModel> local, SelectionOps selection);

  const StateModel& nonlocal() const { return *nonlocal_; }
  const StateModel& local() const { return *local_; }
  const SelectionOps& selection() const { return selection_; }

  /// Control layout: nonlocal control dofs first, then local control dofs.
  Index control_size() const { return nonlocal_->num_controls() + local_->num_controls(); }
  VectorXd nonlocal_part(const VectorXd& nu) const { return nu.head(nonlocal_->num_controls()); }
  VectorXd local_part(const VectorXd& nu) const { return nu.tail(local_->num_controls()); }
  VectorXd join(const VectorXd& nu_n, const VectorXd& nu_l) const;

  States solve_states(const VectorXd& nu) const;
  VectorXd residual(const States& s) const;
  double objective(const States& s) const;
  double objective_of_residual(const VectorXd& r) const;
  /// Reduced gradient at the states for nu.
  VectorXd gradient(const States& s) const;
  /// Gradient of the residual-linear part: G(r) with zero loads.
  VectorXd gradient_of_residual(const VectorXd& r) const;
  /// Exact control traces of a displacement field: (field at control points, field at control nodes).
  VectorXd trace(const VectorField& u, const PointCloud& cloud, const HexMesh& mesh) const;

 private:
  std::shared_ptr<StateModel> nonlocal_;
  std::shared_ptr<StateModel> local_;
  SelectionOps selection_;
};

/// Reduced functional J(nu) with closed-form line restrictions (J is quadratic).
class ReducedObjective final : public Objective {
 public:
  explicit ReducedObjective(const CouplingProblem& problem) : problem_(problem) {}
  Index size() const override { return problem_.control_size(); }
  double evaluate(const VectorXd& x, VectorXd& grad) override;
  std::unique_ptr<LineFunction> line(const VectorXd& x, double f, const VectorXd& g, const VectorXd& p) override;
  void accept(const VectorXd& x_new, double a) override;

  const States& states() const { return states_; }

 private:
  const CouplingProblem& problem_;
  States states_;
  VectorXd residual_;
  // Pending line data for accept().
  States direction_states_;
  VectorXd direction_residual_;
};

struct CouplingResult {
  VectorXd control;
  States states;
  OptimizeResult optimization;
  double objective = 0.0;
  double mismatch_rms = 0.0;
  Index solves = 0;
};

CouplingResult optimize(const CouplingProblem& problem, const VectorXd& nu0, const OptimizerConfig& cfg);

/// Composite field: u_n on nonlocal points, u_l on local nodes outside the overlap.
struct CompositeSolution {
  std::vector<Index> nonlocal_points;
  std::vector<Index> local_nodes;
  std::vector<Index> overlap_nodes;  // local nodes inside the overlap, kept for diagnostics
  std::vector<Vec3> nonlocal_values;
  std::vector<Vec3> local_values;
  std::vector<Vec3> overlap_values;
  double mismatch_rms = 0.0;
};

CompositeSolution composite_solution(const States& states, const PointCloud& cloud, const HexMesh& mesh,
                                     const BoxUnion& overlap, double objective, double total_sample_volume);

// Builders used by experiments and tests.

struct NonlocalSpec {
  std::shared_ptr<const PointCloud> cloud;
  std::shared_ptr<const Family> family;
  MaterialParams params;
  InfluenceFunction kappa;
  VectorField body_force;  // force density on interior points
  VectorField data;        // values on Dirichlet points
  std::optional<BoxUnion> body;
};

struct LocalSpec {
  std::shared_ptr<const HexMesh> mesh;
  MaterialParams params;
  LoadSpec loads;
  std::string control_set = kGammaC;
};

std::shared_ptr<StateModel> build_nonlocal_model(const NonlocalSpec& spec, const SolverConfig& cfg,
                                                 std::shared_ptr<const LpsOperator>* op_out = nullptr);
std::shared_ptr<StateModel> build_local_model(const LocalSpec& spec, const SolverConfig& cfg,
                                              std::shared_ptr<const BlockSparseMatrix>* stiffness_out = nullptr);

}  // namespace pdc
