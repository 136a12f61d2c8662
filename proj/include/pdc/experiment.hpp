#pragma once

#include "pdc/config.hpp"
#include "pdc/coupling.hpp"
#include "pdc/verification.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>

namespace pdc {

/// Everything assembled for one coupled solve at a single resolution.
struct CoupledModel {
  ExperimentConfig config;
  double h = 0.0;
  double horizon = 0.0;
  GeometryConfig geometry;
  std::shared_ptr<PointCloud> cloud;
  std::shared_ptr<Family> family;
  std::shared_ptr<HexMesh> mesh;
  std::optional<MmsCase> mms;
  InfluenceFunction kappa;
  LoadSpec local_loads;
  std::shared_ptr<const LpsOperator> lps;
  std::shared_ptr<const BlockSparseMatrix> stiffness;
  std::shared_ptr<StateModel> nonlocal;
  std::shared_ptr<StateModel> local;
  std::shared_ptr<CouplingProblem> problem;
  Index bonds_removed = 0;
  double build_seconds = 0.0;
};

/// Builds the model at the config's own h and horizon.
CoupledModel build_model(const ExperimentConfig& cfg);
/// Builds the model at an explicit resolution (used by refinement studies).
CoupledModel build_model(const ExperimentConfig& cfg, double h, double horizon);

struct RunResult {
  CouplingResult coupling;
  CompositeSolution composite;
  VectorXd force_density;  // nonlocal L^h u at every point
  std::optional<ErrorNorms> errors;
  std::map<std::string, Vec3> reactions;  // per Dirichlet node set
  Vec3 applied_traction = Vec3::Zero();   // resultant of all traction loads
  double first_objective = 0.0;
  double seconds = 0.0;
};

/// Optimizes from zero controls and post-processes the optimum.
RunResult solve_model(const CoupledModel& model);

/// Nonlocal points (interior and control) and all local nodes.
std::vector<Index> nonlocal_field_points(const PointCloud& cloud);
std::vector<Index> all_nodes(const HexMesh& mesh);

/// Fixed-horizon or fixed-ratio refinement over the configured levels.
/// `log` receives one line per level when non-null.
ConvergenceReport convergence_study(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Least-squares affine fit u ~ c + A x over the given points; returns the
/// largest residual norm divided by the range of |u| over the same points.
double affine_fit_residual(const std::vector<Vec3>& x, const std::vector<Vec3>& u);

/// Runs the configured experiment, writes artifacts to cfg.output_dir and
/// returns a process exit status.
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

/// Gradient check on the configured problem at a seeded random control.
GradientCheck check_gradient(const ExperimentConfig& cfg, int components, double step, unsigned seed = 11);

}  // namespace pdc
