#pragma once

#include "pdc/coupling.hpp"
#include "pdc/lps.hpp"

#include <string>
#include <vector>

namespace pdc {

/// Manufactured displacement field with its Navier-Cauchy body force.
struct MmsCase {
  std::string name;
  MaterialParams params;
  VectorField u;
  VectorField b;  // -div sigma[u]
  VectorField g;  // boundary / volume-constraint data, the trace of u

  /// Largest deviation between b and -div sigma[u] evaluated by central
  /// differences of u, relative to max(1, |b|), over the sample points.
  double self_check(const std::vector<Vec3>& samples, double step = 1e-3) const;
};

/// "linear-I" or "quadratic-II". Runs the finite-difference self-check and
/// throws ValidationError when it exceeds 1e-6.
MmsCase mms_case(const std::string& name, const MaterialParams& params);

/// -div sigma[u] at x by central differences of u.
Vec3 navier_cauchy_residual_fd(const VectorField& u, const MaterialParams& params, const Vec3& x, double step);

struct ErrorNorms {
  double l2_n = 0.0;   // plain l2 norm of the nonlocal dof error
  double l2_l = 0.0;   // plain l2 norm of the local dof error
  double rms_n = 0.0;  // volume-weighted RMS over nonlocal points
  double rms_l = 0.0;  // RMS over local nodes
  double ref_n = 0.0;  // plain l2 norm of the exact nonlocal values
  double ref_l = 0.0;
};

/// Errors of computed fields against an exact field at the given dofs.
/// `points`/`nodes` select which cloud points and mesh nodes enter the norms.
ErrorNorms error_norms(const VectorXd& u_n, const VectorXd& u_l, const VectorField& exact, const PointCloud& cloud,
                       const std::vector<Index>& points, const HexMesh& mesh, const std::vector<Index>& nodes);

/// Plain l2 norm of the difference of two equally long vectors.
double l2_error(const VectorXd& computed, const VectorXd& exact);

enum class DeltaPolicy { FixedDelta, FixedRatio };
const char* to_string(DeltaPolicy p);
DeltaPolicy delta_policy_from_string(const std::string& s);

struct ConvergenceLevel {
  double h = 0.0;
  double horizon = 0.0;
  ErrorNorms errors;
  double objective = 0.0;
  Index iterations = 0;
  bool converged = false;
  double seconds = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceLevel> levels;

  std::vector<double> spacings() const;
  /// Least-squares slope of log(error) against log(h).
  static double fit_rate(const std::vector<double>& h, const std::vector<double>& e);
  /// Per-step rates log(e_k/e_{k+1}) / log(h_k/h_{k+1}); one fewer than levels.
  static std::vector<double> step_rates(const std::vector<double>& h, const std::vector<double>& e);

  std::vector<double> errors_n(bool rms) const;
  std::vector<double> errors_l(bool rms) const;
  /// Fitted rates; throws ValidationError with fewer than three levels.
  double rate_n(bool rms) const;
  double rate_l(bool rms) const;
  /// Checks the level sequence: h strictly decreasing.
  void validate() const;
};

/// Central differences of J on randomly drawn control components.
struct GradientCheck {
  std::vector<Index> components;
  std::vector<double> analytic;
  std::vector<double> finite_difference;
  double max_relative_error = 0.0;
  double gradient_norm = 0.0;
};

/// Draws `n_components` controls (seeded) at control vector nu and compares
/// the adjoint gradient against (J(nu + s e_k) - J(nu - s e_k)) / 2s.
/// Components whose analytic value falls below `floor` times the largest
/// gradient entry are measured against that floor instead of their own size.
GradientCheck gradient_check(const CouplingProblem& problem, const VectorXd& nu, int n_components, double step,
                             unsigned seed = 11, double floor = 1e-3);

}  // namespace pdc
