#include "pdc/verification.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace pdc {

Vec3 navier_cauchy_residual_fd(const VectorField& u, const MaterialParams& params, const Vec3& x, double s) {
  // hess[k](i, j) = d_i d_j u_k
  std::array<Mat3, 3> hess;
  const Mat3 e = Mat3::Identity();
  const Vec3 u0 = u(x);
  for (int i = 0; i < 3; ++i) {
    const Vec3 d2 = (u(x + s * e.col(i)) - 2.0 * u0 + u(x - s * e.col(i))) / (s * s);
    for (int k = 0; k < 3; ++k) hess[k](i, i) = d2[k];
    for (int j = i + 1; j < 3; ++j) {
      const Vec3 ei = s * e.col(i), ej = s * e.col(j);
      const Vec3 m = (u(x + ei + ej) - u(x + ei - ej) - u(x - ei + ej) + u(x - ei - ej)) / (4.0 * s * s);
      for (int k = 0; k < 3; ++k) hess[k](i, j) = hess[k](j, i) = m[k];
    }
  }
  const double lambda = params.lambda(), mu = params.mu();
  Vec3 div_sigma;
  for (int k = 0; k < 3; ++k) {
    double lap = hess[k].trace();
    double grad_div = 0.0;
    for (int i = 0; i < 3; ++i) grad_div += hess[i](k, i);
    div_sigma[k] = mu * lap + (lambda + mu) * grad_div;
  }
  return -div_sigma;
}

double MmsCase::self_check(const std::vector<Vec3>& samples, double step) const {
  double worst = 0.0;
  for (const Vec3& x : samples) {
    const Vec3 bx = b(x);
    const Vec3 fd = navier_cauchy_residual_fd(u, params, x, step);
    worst = std::max(worst, (bx - fd).norm() / std::max(1.0, bx.norm()));
  }
  return worst;
}

MmsCase mms_case(const std::string& name, const MaterialParams& params) {
  params.validate();
  MmsCase c;
  c.name = name;
  c.params = params;
  if (name == "linear-I") {
    c.u = [](const Vec3& x) { return Vec3(x[0], 0.0, 0.0); };
    c.b = [](const Vec3&) { return Vec3::Zero().eval(); };
  } else if (name == "quadratic-II") {
    // u = (x^2, 0, 0): laplacian u = (2, 0, 0), grad div u = (2, 0, 0).
    const double bx = -(2.0 * params.mu() + 2.0 * (params.lambda() + params.mu()));
    c.u = [](const Vec3& x) { return Vec3(x[0] * x[0], 0.0, 0.0); };
    c.b = [bx](const Vec3&) { return Vec3(bx, 0.0, 0.0); };
  } else {
    throw ParameterError("unknown manufactured solution '" + name + "' (expected linear-I or quadratic-II)");
  }
  c.g = c.u;

  std::vector<Vec3> samples;
  for (double x : {0.0, 0.5, 1.0})
    for (double y : {0.0, 0.5, 1.0})
      for (double z : {0.0, 0.5, 1.0}) samples.emplace_back(x, y, z);
  const double err = c.self_check(samples);
  if (!(err <= 1e-6)) {
    std::ostringstream os;
    os << "manufactured body force for " << name << " disagrees with the finite-difference operator by " << err;
    throw ValidationError(os.str());
  }
  return c;
}

ErrorNorms error_norms(const VectorXd& u_n, const VectorXd& u_l, const VectorField& exact, const PointCloud& cloud,
                       const std::vector<Index>& points, const HexMesh& mesh, const std::vector<Index>& nodes) {
  if (u_n.size() != 3 * cloud.size() || u_l.size() != 3 * mesh.num_nodes())
    throw ShapeError("error norms: field lengths do not match the discretizations");
  ErrorNorms e;
  double sn = 0.0, vn = 0.0, refn = 0.0;
  for (Index p : points) {
    const Vec3 ex = exact(cloud.positions[p]);
    const double d2 = (u_n.segment<3>(3 * p) - ex).squaredNorm();
    sn += d2;
    e.rms_n += cloud.volumes[p] * d2;
    vn += cloud.volumes[p];
    refn += ex.squaredNorm();
  }
  double sl = 0.0, refl = 0.0;
  for (Index n : nodes) {
    const Vec3 ex = exact(mesh.nodes[n]);
    sl += (u_l.segment<3>(3 * n) - ex).squaredNorm();
    refl += ex.squaredNorm();
  }
  e.l2_n = std::sqrt(sn);
  e.l2_l = std::sqrt(sl);
  e.rms_n = vn > 0.0 ? std::sqrt(e.rms_n / vn) : 0.0;
  e.rms_l = nodes.empty() ? 0.0 : std::sqrt(sl / static_cast<double>(nodes.size()));
  e.ref_n = std::sqrt(refn);
  e.ref_l = std::sqrt(refl);
  return e;
}

double l2_error(const VectorXd& computed, const VectorXd& exact) {
  if (computed.size() != exact.size()) throw ShapeError("l2 error: length mismatch");
  return (computed - exact).norm();
}

const char* to_string(DeltaPolicy p) { return p == DeltaPolicy::FixedDelta ? "fixed-delta" : "fixed-ratio"; }

DeltaPolicy delta_policy_from_string(const std::string& s) {
  if (s == "fixed-delta") return DeltaPolicy::FixedDelta;
  if (s == "fixed-ratio") return DeltaPolicy::FixedRatio;
  throw ParameterError("unknown horizon policy '" + s + "' (expected fixed-delta or fixed-ratio)");
}

std::vector<double> ConvergenceReport::spacings() const {
  std::vector<double> h;
  for (const auto& l : levels) h.push_back(l.h);
  return h;
}

double ConvergenceReport::fit_rate(const std::vector<double>& h, const std::vector<double>& e) {
  if (h.size() != e.size() || h.size() < 2) throw ValidationError("rate fit needs matching series of length >= 2");
  const std::size_t n = h.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!(h[k] > 0.0 && e[k] > 0.0)) throw ValidationError("rate fit needs positive spacings and errors");
    mx += std::log(h[k]);
    my += std::log(e[k]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = std::log(h[k]) - mx;
    sxy += dx * (std::log(e[k]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

std::vector<double> ConvergenceReport::step_rates(const std::vector<double>& h, const std::vector<double>& e) {
  std::vector<double> r;
  for (std::size_t k = 1; k < h.size(); ++k) r.push_back(std::log(e[k - 1] / e[k]) / std::log(h[k - 1] / h[k]));
  return r;
}

std::vector<double> ConvergenceReport::errors_n(bool rms) const {
  std::vector<double> e;
  for (const auto& l : levels) e.push_back(rms ? l.errors.rms_n : l.errors.l2_n);
  return e;
}

std::vector<double> ConvergenceReport::errors_l(bool rms) const {
  std::vector<double> e;
  for (const auto& l : levels) e.push_back(rms ? l.errors.rms_l : l.errors.l2_l);
  return e;
}

void ConvergenceReport::validate() const {
  if (levels.size() < 3) throw ValidationError("a fitted rate needs at least three refinement levels");
  for (std::size_t k = 1; k < levels.size(); ++k)
    if (!(levels[k].h < levels[k - 1].h)) throw ValidationError("refinement levels must have strictly decreasing h");
}

double ConvergenceReport::rate_n(bool rms) const {
  validate();
  return fit_rate(spacings(), errors_n(rms));
}

double ConvergenceReport::rate_l(bool rms) const {
  validate();
  return fit_rate(spacings(), errors_l(rms));
}

GradientCheck gradient_check(const CouplingProblem& problem, const VectorXd& nu, int n_components, double step,
                             unsigned seed, double floor) {
  if (nu.size() != problem.control_size()) throw ShapeError("gradient check: control length mismatch");
  if (n_components < 1) throw ParameterError("gradient check needs at least one component");
  if (!(step > 0.0)) throw ParameterError("gradient check step must be positive");
  GradientCheck out;
  const States s = problem.solve_states(nu);
  const VectorXd g = problem.gradient(s);
  out.gradient_norm = g.norm();
  const double scale = floor * g.cwiseAbs().maxCoeff();

  std::vector<Index> all(nu.size());
  std::iota(all.begin(), all.end(), Index{0});
  std::mt19937 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(n_components), all.size());
  out.components.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
  std::sort(out.components.begin(), out.components.end());

  for (Index k : out.components) {
    VectorXd xp = nu, xm = nu;
    xp[k] += step;
    xm[k] -= step;
    // J(xp) - J(xm) summed sample by sample as V (rp - rm).(rp + rm) / 2: forming
    // each total first loses the difference in the last bits of J.
    const VectorXd rp = problem.residual(problem.solve_states(xp));
    const VectorXd rm = problem.residual(problem.solve_states(xm));
    const auto& vol = problem.selection().volumes;
    double dj = 0.0;
    for (Index i = 0; i < problem.selection().size(); ++i)
      dj += 0.5 * vol[i] * (rp.segment<3>(3 * i) - rm.segment<3>(3 * i)).dot(rp.segment<3>(3 * i) + rm.segment<3>(3 * i));
    const double fd = dj / (2.0 * step);
    out.analytic.push_back(g[k]);
    out.finite_difference.push_back(fd);
    const double denom = std::max(std::abs(g[k]), scale);
    const double rel = denom > 0.0 ? std::abs(fd - g[k]) / denom : std::abs(fd - g[k]);
    out.max_relative_error = std::max(out.max_relative_error, rel);
  }
  return out;
}

}  // namespace pdc
