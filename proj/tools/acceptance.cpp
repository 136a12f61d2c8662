// Acceptance run: one PASS/FAIL line per criterion.
#include "pdc/experiment.hpp"
#include "pdc/fem.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace pdc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

VectorXd random_field(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

VectorXd field_at(const std::vector<Vec3>& x, const std::function<Vec3(const Vec3&)>& f) {
  VectorXd v(3 * x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v.segment<3>(3 * i) = f(x[i]);
  return v;
}

Box make(double x0, double x1, double y0, double y1, double z0, double z1) {
  return Box{Vec3(x0, y0, z0), Vec3(x1, y1, z1)};
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Outcome ac1() {
  Outcome o{true, ""};
  for (double h : {1.0 / 8.0, 1.0 / 16.0}) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig c = canned_config("patch-test");
    c.h = h;
    c.horizon = 3.0 * h;
    c.validate();
    const RunResult r = solve_model(build_model(c));
    const double en = r.errors->l2_n / r.errors->ref_n, el = r.errors->l2_l / r.errors->ref_l;
    const double t = seconds_since(t0);
    o.pass = o.pass && r.coupling.optimization.converged && en <= 1e-9 && el <= 1e-9 && t <= 120.0;
    o.detail += fmt("h=1/%.0f: rel error_n %.2e, error_l %.2e, %.0f s; ", 1.0 / h, en, el, t);
  }
  return o;
}

Outcome ac2() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c = canned_config("converge");
  c.validate();
  const ConvergenceReport rep = convergence_study(c);
  const double rn = rep.rate_n(false), rl = rep.rate_l(false);
  const double t = seconds_since(t0);
  Outcome o;
  o.pass = rn >= 0.7 && rn <= 1.3 && rl >= 1.7 && rl <= 2.3 && t <= 900.0;
  o.detail = fmt("fitted l2 rates nonlocal %.3f (want 0.7..1.3), local %.3f (want 1.7..2.3), %.0f s", rn, rl, t);
  o.detail += fmt("; volume-weighted rms rates %.3f / %.3f", rep.rate_n(true), rep.rate_l(true));
  return o;
}

Outcome ac3() {
  const PointCloud c = generate_point_cloud(BoxUnion({make(0, 8, 0, 8, 0, 7)}), 1.0);
  const MaterialParams p = MaterialParams::from_lame(109.62, 73.08);
  const Family f = build_families(c, 2.5);
  double worst = 0.0;
  for (InfluenceKind kind : {InfluenceKind::Constant, InfluenceKind::InverseDistance}) {
    const InfluenceFunction k{kind, 2.5};
    const BlockSparseMatrix a = assemble_lps_operator(c, f, p, k);
    const double norm_a = a.dense().cwiseAbs().rowwise().sum().maxCoeff();
    for (unsigned seed : {1u, 2u, 3u}) {
      const VectorXd u = random_field(3 * c.size(), seed);
      worst = std::max(worst, (a * u + lps_apply_oracle(c, f, p, k, u)).cwiseAbs().maxCoeff() / norm_a);
    }
  }
  return {c.size() <= 500 && worst <= 1e-12, fmt("%.0f points, max |A u - oracle| / |A| = %.2e", c.size(), worst)};
}

Outcome ac4() {
  const PointCloud c =
      generate_point_cloud(BoxUnion({make(0, 6, 0, 3, 0, 3), make(0, 3, 3, 6, 0, 3)}), 0.5);
  const Family f = build_families(c, 1.5);
  const InfluenceFunction k{InfluenceKind::Constant, 1.5};
  const VectorXd m = weighted_volume(c, f, k);
  double worst = 0.0;
  for (double alpha : {1.0, -0.3, 1e5}) {
    const VectorXd u = field_at(c.positions, [&](const Vec3& x) { return Vec3(alpha * x); });
    const VectorXd theta = dilatation(c, f, k, m, u);
    worst = std::max(worst, (theta.array() - 3.0 * alpha).abs().maxCoeff() / std::max(1.0, std::abs(3.0 * alpha)));
  }
  return {worst <= 1e-12, fmt("%.0f points, max |theta - 3 alpha| / max(1, |3 alpha|) = %.2e", c.size(), worst)};
}

Outcome gradient_ac(const char* name) {
  ExperimentConfig c = canned_config(name);
  c.validate();
  const GradientCheck g = check_gradient(c, 10, 1e-6);
  return {g.components.size() >= 10 && g.max_relative_error <= 1e-5,
          fmt("%.0f components, max relative error %.2e", g.components.size(), g.max_relative_error)};
}

Outcome ac5() {
  const Outcome a = gradient_ac("patch-test"), b = gradient_ac("bar-dirichlet");
  return {a.pass && b.pass, "patch-test: " + a.detail + "; bar-dirichlet: " + b.detail};
}

Outcome ac6() {
  const HexMesh mesh = generate_hex_mesh(BoxUnion({make(0, 1.5, 0, 1, 0.5, 1)}), 0.25);
  const BlockSparseMatrix k = assemble_stiffness(mesh, MaterialParams::from_bulk_poisson(140000, 0.3));
  double fe = 0.0;
  for (int a = 0; a < 3; ++a) {
    const VectorXd t = field_at(mesh.nodes, [&](const Vec3&) { return Vec3(Vec3::Unit(a)); });
    const VectorXd r = field_at(mesh.nodes, [&](const Vec3& x) { return Vec3(Vec3::Unit(a).cross(x)); });
    fe = std::max(fe, (k * t).cwiseAbs().maxCoeff() / (k.max_abs() * t.cwiseAbs().maxCoeff()));
    fe = std::max(fe, (k * r).cwiseAbs().maxCoeff() / (k.max_abs() * r.cwiseAbs().maxCoeff()));
  }
  const PointCloud c = generate_point_cloud(BoxUnion({make(0, 4, 0, 3, 0, 3)}), 0.5);
  const Family f = build_families(c, 1.5);
  const BlockSparseMatrix a =
      assemble_lps_operator(c, f, MaterialParams::from_lame(109.62, 73.08), {InfluenceKind::Constant, 1.5});
  double lps = 0.0;
  for (int d = 0; d < 3; ++d) {
    const VectorXd t = field_at(c.positions, [&](const Vec3&) { return Vec3(Vec3::Unit(d)); });
    lps = std::max(lps, (a * t).cwiseAbs().maxCoeff() / a.max_abs());
  }
  // Block-row sums: applying A to a translation sums each block row.
  double rows = 0.0;
  const MatrixXd dense = a.dense();
  for (Index i = 0; i < c.size(); ++i) {
    Mat3 s = Mat3::Zero();
    for (Index j = 0; j < c.size(); ++j) s += dense.block<3, 3>(3 * i, 3 * j);
    rows = std::max(rows, s.cwiseAbs().maxCoeff() / a.max_abs());
  }
  return {fe <= 1e-10 && lps <= 1e-10 && rows <= 1e-10,
          fmt("FE rigid modes %.2e, LPS translations %.2e, LPS block-row sums %.2e (relative)", fe, lps, rows)};
}

Outcome ac7() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c = canned_config("bar-dirichlet");
  c.validate();
  const CoupledModel m = build_model(c);
  const RunResult r = solve_model(m);
  const double reduction = r.first_objective / std::max(r.coupling.objective, 1e-300);
  double umax = 0.0;
  for (const Vec3& v : r.composite.nonlocal_values) umax = std::max(umax, v.norm());
  for (const Vec3& v : r.composite.local_values) umax = std::max(umax, v.norm());
  // Every remaining bond is checked against the plane; the unfiltered family
  // fixes how many should have gone.
  const PrenotchPlane& plane = *m.geometry.prenotch;
  Index crossing = 0;
  for (Index i = 0; i < m.family->size(); ++i)
    for (Index j : m.family->neighbors_of(i))
      if (plane.cuts(m.cloud->positions[i], m.cloud->positions[j])) ++crossing;
  const Family full = build_families(*m.cloud, m.horizon, c.partial_volume);
  Index expected = 0;
  for (Index i = 0; i < full.size(); ++i)
    for (Index j : full.neighbors_of(i))
      if (plane.cuts(m.cloud->positions[i], m.cloud->positions[j])) ++expected;
  Outcome o;
  o.pass = r.coupling.optimization.converged && reduction >= 1e4 && r.composite.mismatch_rms <= 1e-3 * umax &&
           crossing == 0 && expected > 0 && m.bonds_removed == expected;
  o.detail = fmt("converged=%.0f, J reduced %.3gx, mismatch rms %.3g vs 1e-3 * max|u| = %.3g",
                 r.coupling.optimization.converged ? 1.0 : 0.0, reduction, r.composite.mismatch_rms, 1e-3 * umax);
  o.detail += fmt("; crossing bonds %.0f, removed %.0f of %.0f; %.0f s", crossing, m.bonds_removed, expected,
                  seconds_since(t0));
  return o;
}

Outcome ac8() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c = canned_config("bar-neumann");
  c.validate();
  const CoupledModel m = build_model(c);
  const RunResult r = solve_model(m);
  const double applied = r.applied_traction[0];
  const double reaction = r.reactions.at("gamma_d_right")[0];
  const double balance = std::abs(reaction + applied) / std::abs(applied);
  // Nonlocal displacements on the fixed-end side of the overlap, x in [14, 16].
  std::vector<Vec3> x, u;
  for (Index i = 0; i < m.cloud->size(); ++i) {
    if (m.cloud->positions[i][0] < 14.0 - 1e-9) continue;
    x.push_back(m.cloud->positions[i]);
    u.push_back(r.coupling.states.nonlocal.segment<3>(3 * i));
  }
  const double fit = affine_fit_residual(x, u);
  Outcome o;
  o.pass = r.coupling.optimization.converged && std::abs(applied + 54400.0) <= 1e-9 * 54400.0 && balance <= 0.01 &&
           fit <= 0.05;
  o.detail = fmt("applied %.6g N, reaction %.6g N, imbalance %.3g%%", applied, reaction, 100 * balance);
  o.detail += fmt("; affine fit residual near x=+16 %.3g%% of range over %.0f points; %.0f s", 100 * fit, x.size(),
                  seconds_since(t0));
  return o;
}

Outcome ac9() {
  const MaterialParams p = MaterialParams::from_lame(109.62, 73.08);
  const std::vector<Vec3> samples{Vec3(0.1, 0.2, 0.3), Vec3(0.5, 0.5, 0.5), Vec3(0.9, 0.1, 0.7),
                                  Vec3(-0.4, 1.3, 0.2)};
  double worst = 0.0;
  for (const char* name : {"linear-I", "quadratic-II"}) worst = std::max(worst, mms_case(name, p).self_check(samples));
  const Vec3 b = mms_case("quadratic-II", p).b(Vec3::Zero());
  return {worst <= 1e-6, fmt("max |b - FD(-div sigma)| = %.2e; quadratic b_x = %.2f", worst, b[0])};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria AC1-AC9"};
  std::vector<std::string> only, known;
  app.add_option("--only", only, "Run only these criteria (e.g. AC3)");
  app.add_option("--known-failure", known,
                 "Criteria that still print their verdict but do not set the exit status");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
      {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}};
  const std::set<std::string> want(only.begin(), only.end()), tolerated(known.begin(), known.end());
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    if (!want.empty() && !want.count(name)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail;
    if (!o.pass && tolerated.count(name)) std::cout << " [known failure]";
    std::cout << std::endl;
    if (!o.pass && !tolerated.count(name)) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
