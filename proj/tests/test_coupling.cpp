#include "helpers.hpp"
#include "pdc/experiment.hpp"

#include <doctest.h>

#include <set>

using namespace pdc;
using pdc::test::cube;
using pdc::test::field_at;
using pdc::test::random_field;

namespace {

ExperimentConfig patch_config(const std::string& field = "linear-I") {
  ExperimentConfig c = canned_config("patch-test");
  c.field = field;
  c.validate();
  return c;
}

const CoupledModel& patch_model() {
  static const CoupledModel m = build_model(patch_config());
  return m;
}

VectorXd exact_trace(const CoupledModel& m) {
  return m.problem->trace(m.mms->u, *m.cloud, *m.mesh);
}

double max_nodal_error(const VectorXd& u, const std::vector<Vec3>& x, const VectorField& exact,
                       const std::vector<Index>& ids) {
  double worst = 0.0;
  for (Index i : ids) worst = std::max(worst, (u.segment<3>(3 * i) - exact(x[i])).norm());
  return worst;
}

}  // namespace

TEST_CASE("selection operator weights") {
  const PointCloud c = generate_point_cloud(cube(0, 1), 0.25);
  SUBCASE("points at cell centroids") {
    PointCloud cc = c;
    std::fill(cc.overlap.begin(), cc.overlap.end(), 1);
    const HexMesh m = generate_hex_mesh(cube(0, 1), 0.25);
    const SelectionOps s = build_selection_ops(cc, m);
    REQUIRE(s.size() == cc.size());
    for (Index k = 0; k < s.size(); ++k)
      for (double w : s.weights[k]) CHECK(w == doctest::Approx(0.125).epsilon(1e-14));
  }
  SUBCASE("points on mesh nodes") {
    PointCloud cc = c;
    std::fill(cc.overlap.begin(), cc.overlap.end(), 1);
    // A mesh shifted by h/2 puts every point on a node.
    const HexMesh m = generate_hex_mesh(cube(-0.125, 1.125), 0.25);
    const SelectionOps s = build_selection_ops(cc, m);
    const VectorXd u_l = random_field(3 * m.num_nodes(), 3);
    const VectorXd sampled = s.interpolate(u_l);
    for (Index k = 0; k < s.size(); ++k) {
      int ones = 0, zeros = 0;
      for (double w : s.weights[k]) {
        if (std::abs(w - 1.0) <= 1e-12) ++ones;
        else if (std::abs(w) <= 1e-12) ++zeros;
      }
      CHECK(ones == 1);
      CHECK(zeros == 7);
    }
    (void)sampled;
  }
  SUBCASE("rows of the interpolation sum to one") {
    const SelectionOps& s = patch_model().problem->selection();
    for (Index k = 0; k < s.size(); ++k) {
      double sum = 0.0;
      for (double w : s.weights[k]) sum += w;
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("selection transposes are adjoint") {
  const SelectionOps& s = patch_model().problem->selection();
  const VectorXd un = random_field(3 * s.num_points, 1), ul = random_field(3 * s.num_nodes, 2);
  const VectorXd r = random_field(3 * s.size(), 3);
  VectorXd tn = VectorXd::Zero(un.size()), tl = VectorXd::Zero(ul.size());
  s.add_select_transpose(r, tn);
  s.add_interpolate_transpose(r, tl);
  CHECK(std::abs(r.dot(s.select(un)) - tn.dot(un)) <= 1e-12 * r.norm() * un.norm());
  CHECK(std::abs(r.dot(s.interpolate(ul)) - tl.dot(ul)) <= 1e-12 * r.norm() * ul.norm());
}

TEST_CASE("exact controls reproduce the linear field in both models") {
  const CoupledModel& m = patch_model();
  const States s = m.problem->solve_states(exact_trace(m));
  CHECK(max_nodal_error(s.nonlocal, m.cloud->positions, m.mms->u, nonlocal_field_points(*m.cloud)) <= 1e-9);
  CHECK(max_nodal_error(s.local, m.mesh->nodes, m.mms->u, all_nodes(*m.mesh)) <= 1e-9);
  CHECK(m.problem->objective(s) <= 1e-20);
}

TEST_CASE("state responses are linear in the controls") {
  const CoupledModel& m = patch_model();
  const CouplingProblem& p = *m.problem;
  const VectorXd nu1 = random_field(p.control_size(), 5), nu2 = random_field(p.control_size(), 6);
  const States s1 = p.solve_states(nu1), s12 = p.solve_states(nu1 + nu2);
  const VectorXd rn = m.nonlocal->response(p.nonlocal_part(nu2));
  const VectorXd rl = m.local->response(p.local_part(nu2));
  CHECK((s12.nonlocal - s1.nonlocal - rn).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((s12.local - s1.local - rl).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("objective values") {
  const CouplingProblem& p = *patch_model().problem;
  const SelectionOps& s = p.selection();
  CHECK(p.objective_of_residual(VectorXd::Zero(3 * s.size())) == 0.0);
  VectorXd r = VectorXd::Zero(3 * s.size());
  r[0] = 1.0;
  CHECK(p.objective_of_residual(r) == doctest::Approx(0.5 * s.volumes[0]).epsilon(1e-15));
  CHECK(p.objective_of_residual(2.0 * r) == doctest::Approx(2.0 * s.volumes[0]).epsilon(1e-15));
  CHECK(p.objective_of_residual(VectorXd::Ones(3 * s.size())) == doctest::Approx(1.5 * s.total_volume()).epsilon(1e-13));
}

TEST_CASE("reduced gradient") {
  const CoupledModel& m = patch_model();
  const CouplingProblem& p = *m.problem;
  const VectorXd g0 = p.gradient(p.solve_states(VectorXd::Zero(p.control_size())));
  const VectorXd gs = p.gradient(p.solve_states(exact_trace(m)));
  CHECK(gs.norm() <= 1e-8 * g0.norm());

  const VectorXd nu = random_field(p.control_size(), 8);
  const VectorXd g1 = p.gradient(p.solve_states(nu)), g2 = p.gradient(p.solve_states(2.0 * nu));
  CHECK(((g2 - g0) - 2.0 * (g1 - g0)).norm() <= 1e-9 * std::max(1.0, (g1 - g0).norm()));

  const GradientCheck gc = gradient_check(p, nu, 10, 1e-6);
  CHECK(gc.components.size() == 10);
  CHECK(gc.max_relative_error <= 1e-5);
}

TEST_CASE("central differences of a quadratic functional stay exact as the step shrinks") {
  const CouplingProblem& p = *patch_model().problem;
  const VectorXd nu = random_field(p.control_size(), 9);
  for (double step : {1e-4, 1e-5, 1e-6}) {
    CAPTURE(step);
    CHECK(gradient_check(p, nu, 10, step, 3).max_relative_error <= 1e-5);
  }
}

TEST_CASE("optimizer recovers the linear patch solution") {
  const CoupledModel& m = patch_model();
  const CouplingResult r = optimize(*m.problem, VectorXd::Zero(m.problem->control_size()), m.config.optimizer);
  CHECK(r.optimization.converged);
  CHECK(r.objective <= 1e-16 * r.optimization.history.front().objective);
  CHECK(max_nodal_error(r.states.nonlocal, m.cloud->positions, m.mms->u, nonlocal_field_points(*m.cloud)) <= 1e-9);
  CHECK(max_nodal_error(r.states.local, m.mesh->nodes, m.mms->u, all_nodes(*m.mesh)) <= 1e-9);
  for (std::size_t k = 1; k < r.optimization.history.size(); ++k)
    CHECK(r.optimization.history[k].objective <= r.optimization.history[k - 1].objective);

  const CompositeSolution comp = composite_solution(r.states, *m.cloud, *m.mesh, m.geometry.regions.overlap,
                                                    r.objective, m.problem->selection().total_volume());
  for (std::size_t k = 0; k < comp.nonlocal_points.size(); ++k)
    CHECK((comp.nonlocal_values[k] - m.mms->u(m.cloud->positions[comp.nonlocal_points[k]])).norm() <= 1e-9);
  for (std::size_t k = 0; k < comp.local_nodes.size(); ++k)
    CHECK((comp.local_values[k] - m.mms->u(m.mesh->nodes[comp.local_nodes[k]])).norm() <= 1e-9);
  CHECK(comp.mismatch_rms ==
        doctest::Approx(std::sqrt(2.0 * r.objective / m.problem->selection().total_volume())).epsilon(1e-12));

  std::set<Index> nodes(comp.local_nodes.begin(), comp.local_nodes.end());
  CHECK(nodes.size() == comp.local_nodes.size());
  for (Index n : comp.overlap_nodes) CHECK(nodes.insert(n).second);
  CHECK(static_cast<Index>(nodes.size()) == m.mesh->num_nodes());
  std::set<Index> pts(comp.nonlocal_points.begin(), comp.nonlocal_points.end());
  CHECK(pts.size() == comp.nonlocal_points.size());
}

TEST_CASE("quadratic field from an exact warm start") {
  ExperimentConfig c = patch_config("quadratic-II");
  c.optimizer = canned_config("converge").optimizer;
  const CoupledModel m = build_model(c);
  const VectorXd nu0 = exact_trace(m);
  const CouplingResult r = optimize(*m.problem, nu0, m.config.optimizer);
  CHECK(r.optimization.converged);
  const VectorXd g0 = m.problem->gradient(m.problem->solve_states(VectorXd::Zero(m.problem->control_size())));
  const VectorXd gw = m.problem->gradient(m.problem->solve_states(nu0));
  // The warm start is optimal up to the discretization mismatch.
  CHECK(gw.norm() <= 1e-2 * g0.norm());
  CHECK(r.objective <= m.problem->objective(m.problem->solve_states(nu0)));
}

TEST_CASE("zero loads, data and controls give zero everywhere") {
  const CoupledModel m = build_model(patch_config("none"));
  const CouplingProblem& p = *m.problem;
  const VectorXd zero = VectorXd::Zero(p.control_size());
  const States s = p.solve_states(zero);
  CHECK(s.nonlocal.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.local.cwiseAbs().maxCoeff() == 0.0);
  const CouplingResult r = optimize(p, zero, m.config.optimizer);
  CHECK(r.control.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.objective == 0.0);
  const GradientCheck gc = gradient_check(p, zero, 10, 1e-6);
  for (std::size_t k = 0; k < gc.components.size(); ++k) {
    CHECK(gc.analytic[k] == 0.0);
    CHECK(std::abs(gc.finite_difference[k]) <= 1e-10);
  }
}

TEST_CASE("control points can be left out of the overlap samples") {
  ExperimentConfig c = patch_config();
  c.sample_control_points = false;
  const CoupledModel m = build_model(c);
  const SelectionOps& s = m.problem->selection();
  const SelectionOps& with = patch_model().problem->selection();
  CHECK(s.size() < with.size());
  for (Index p : s.points) CHECK(m.cloud->tags[p] != Region::Control);
  // The exact trace still zeroes the mismatch.
  CHECK(m.problem->objective(m.problem->solve_states(exact_trace(m))) <= 1e-20);
}
