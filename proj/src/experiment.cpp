#include "pdc/experiment.hpp"

#include "pdc/io.hpp"

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <random>

namespace pdc {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

CoupledModel build_model(const ExperimentConfig& cfg) { return build_model(cfg, cfg.h, cfg.horizon); }

CoupledModel build_model(const ExperimentConfig& cfg, double h, double horizon) {
  const auto t0 = std::chrono::steady_clock::now();
  CoupledModel m;
  m.config = cfg;
  m.h = h;
  m.horizon = horizon;
  m.geometry = cfg.resolved_geometry(h, horizon);
  const GeometryConfig& g = m.geometry;

  auto cloud = std::make_shared<PointCloud>(generate_point_cloud(g.nonlocal_domain, h));
  auto mesh = std::make_shared<HexMesh>(generate_hex_mesh(g.local_domain, h));
  classify_points(*cloud, g.regions);
  classify_mesh(*mesh, g.regions);
  auto family = std::make_shared<Family>(build_families(*cloud, horizon, cfg.partial_volume));
  if (g.prenotch) {
    Family cut = apply_prenotch_filter(*family, *cloud, *g.prenotch);
    m.bonds_removed = family->num_bonds() - cut.num_bonds();
    *family = std::move(cut);
  }
  m.cloud = cloud;
  m.mesh = mesh;
  m.family = family;
  if (cfg.field != "none") m.mms = mms_case(cfg.field, cfg.material);
  m.kappa = InfluenceFunction{cfg.influence, horizon};

  NonlocalSpec ns;
  ns.cloud = cloud;
  ns.family = family;
  ns.params = cfg.material;
  ns.kappa = m.kappa;
  ns.body = g.body;
  if (m.mms) {
    ns.body_force = m.mms->b;
    ns.data = m.mms->g;
  }

  LoadSpec loads;
  if (m.mms) {
    loads.body = m.mms->b;
    for (const auto& [name, ids] : mesh->node_sets)
      if (name.rfind(kGammaD, 0) == 0) loads.dirichlet.push_back({name, {true, true, true}, m.mms->g});
  }
  for (const TractionCondition& t : cfg.tractions) loads.tractions.push_back({t.set, t.traction});
  for (const DirichletCondition& d : cfg.dirichlet) {
    const Vec3 v = d.value;
    loads.dirichlet.push_back({d.set, d.components, [v](const Vec3&) { return v; }});
  }
  m.local_loads = loads;
  LocalSpec ls{mesh, cfg.material, loads, kGammaC};

  m.nonlocal = build_nonlocal_model(ns, cfg.solver, &m.lps);
  m.local = build_local_model(ls, cfg.solver, &m.stiffness);
  m.problem = std::make_shared<CouplingProblem>(m.nonlocal, m.local,
                                                build_selection_ops(*cloud, *mesh, cfg.sample_control_points));
  m.build_seconds = seconds_since(t0);
  return m;
}

std::vector<Index> nonlocal_field_points(const PointCloud& cloud) {
  std::vector<Index> p;
  for (Index i = 0; i < cloud.size(); ++i)
    if (cloud.tags[i] != Region::Dirichlet) p.push_back(i);
  return p;
}

std::vector<Index> all_nodes(const HexMesh& mesh) {
  std::vector<Index> n(mesh.num_nodes());
  for (Index i = 0; i < mesh.num_nodes(); ++i) n[i] = i;
  return n;
}

RunResult solve_model(const CoupledModel& m) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  const CouplingProblem& p = *m.problem;
  r.coupling = optimize(p, VectorXd::Zero(p.control_size()), m.config.optimizer);
  r.first_objective = r.coupling.optimization.history.front().objective;
  const States& s = r.coupling.states;
  r.composite = composite_solution(s, *m.cloud, *m.mesh, m.geometry.regions.overlap, r.coupling.objective,
                                   p.selection().total_volume());
  r.force_density = lps_apply_oracle(*m.cloud, *m.family, m.config.material, m.kappa, s.nonlocal);
  if (m.mms)
    r.errors = error_norms(s.nonlocal, s.local, m.mms->u, *m.cloud, nonlocal_field_points(*m.cloud), *m.mesh,
                           all_nodes(*m.mesh));
  for (const DirichletSpec& d : m.local_loads.dirichlet) {
    if (r.reactions.count(d.node_set)) continue;
    r.reactions[d.node_set] = reaction_force(*m.stiffness, s.local, m.local->load(), m.mesh->node_sets.at(d.node_set));
  }
  for (const TractionSpec& t : m.local_loads.tractions) {
    const VectorXd f = assemble_traction_load(*m.mesh, t.face_set, t.traction);
    for (Index n = 0; n < m.mesh->num_nodes(); ++n) r.applied_traction += f.segment<3>(3 * n);
  }
  r.seconds = seconds_since(t0);
  return r;
}

ConvergenceReport convergence_study(const ExperimentConfig& cfg, std::ostream* log) {
  if (cfg.converge.levels.size() < 3) throw ValidationError("a convergence study needs at least three levels");
  ConvergenceReport report;
  for (double h : cfg.converge.levels) {
    const double delta = cfg.converge.policy == DeltaPolicy::FixedDelta ? cfg.horizon : cfg.converge.ratio * h;
    const auto t0 = std::chrono::steady_clock::now();
    const CoupledModel m = build_model(cfg, h, delta);
    const RunResult r = solve_model(m);
    if (!r.errors) throw ValidationError("convergence studies need a manufactured field");
    ConvergenceLevel lvl;
    lvl.h = h;
    lvl.horizon = delta;
    lvl.errors = *r.errors;
    lvl.objective = r.coupling.objective;
    lvl.iterations = r.coupling.optimization.iterations;
    lvl.converged = r.coupling.optimization.converged;
    lvl.seconds = seconds_since(t0);
    report.levels.push_back(lvl);
    if (log) {
      *log << std::setprecision(6) << "level h=" << h << " horizon=" << delta << " points=" << m.cloud->size()
           << " nodes=" << m.mesh->num_nodes() << " error_n=" << lvl.errors.l2_n << " error_l=" << lvl.errors.l2_l
           << " rms_n=" << lvl.errors.rms_n << " rms_l=" << lvl.errors.rms_l << " J=" << lvl.objective
           << " iterations=" << lvl.iterations << " (" << lvl.seconds << " s)" << std::endl;
    }
    if (!lvl.converged) {
      throw OptimizationError(r.coupling.optimization.history,
                              "convergence level h=" + std::to_string(h) + " did not converge (" +
                                  r.coupling.optimization.reason + ")");
    }
  }
  return report;
}

double affine_fit_residual(const std::vector<Vec3>& x, const std::vector<Vec3>& u) {
  if (x.size() != u.size() || x.size() < 4) throw ShapeError("affine fit needs at least four matching samples");
  const Index n = static_cast<Index>(x.size());
  MatrixXd a(n, 4);
  MatrixXd b(n, 3);
  for (Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a.block<1, 3>(i, 1) = x[i].transpose();
    b.row(i) = u[i].transpose();
  }
  const MatrixXd coef = a.colPivHouseholderQr().solve(b);
  const MatrixXd res = a * coef - b;
  double worst = 0.0;
  for (Index i = 0; i < n; ++i) worst = std::max(worst, res.row(i).norm());
  double range = 0.0;
  for (int c = 0; c < 3; ++c) range = std::max(range, b.col(c).maxCoeff() - b.col(c).minCoeff());
  return range > 0.0 ? worst / range : worst;
}

GradientCheck check_gradient(const ExperimentConfig& cfg, int components, double step, unsigned seed) {
  const CoupledModel m = build_model(cfg);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  // Controls of the size of the prescribed data keep J away from round-off.
  double scale = 0.0;
  scale = std::max(scale, m.nonlocal->data().cwiseAbs().maxCoeff());
  scale = std::max(scale, m.local->data().cwiseAbs().maxCoeff());
  if (scale == 0.0) scale = 1.0;
  VectorXd nu(m.problem->control_size());
  for (Index k = 0; k < nu.size(); ++k) nu[k] = scale * dist(rng);
  return gradient_check(*m.problem, nu, components, step, seed);
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  for (const std::string& w : cfg.warnings) log << "warning: " << w << "\n";
  nlohmann::json summary;
  summary["config"] = config_to_json(cfg);

  if (cfg.experiment == "converge") {
    const ConvergenceReport report = convergence_study(cfg, &log);
    write_convergence_csv((fs::path(cfg.output_dir) / "convergence.csv").string(), report, false);
    write_convergence_csv((fs::path(cfg.output_dir) / "convergence_rms.csv").string(), report, true);
    summary["convergence"] = report_to_json(report);
    write_json((fs::path(cfg.output_dir) / "summary.json").string(), summary);
    log << std::setprecision(4) << "fitted rates (l2): nonlocal " << report.rate_n(false) << ", local "
        << report.rate_l(false) << "\n"
        << "fitted rates (rms): nonlocal " << report.rate_n(true) << ", local " << report.rate_l(true) << "\n";
    return 0;
  }

  const CoupledModel m = build_model(cfg);
  log << "points " << m.cloud->size() << ", nodes " << m.mesh->num_nodes() << ", controls "
      << m.problem->control_size() << ", overlap samples " << m.problem->selection().size();
  if (m.config.geometry.prenotch || m.bonds_removed > 0) log << ", bonds cut by the prenotch " << m.bonds_removed;
  log << " (built in " << std::setprecision(3) << m.build_seconds << " s)\n";
  const RunResult r = solve_model(m);
  const auto& opt = r.coupling.optimization;

  const fs::path out(cfg.output_dir);
  write_cloud_vtk((out / "nonlocal.vtk").string(), *m.cloud, r.coupling.states.nonlocal, r.force_density);
  write_mesh_vtk((out / "local.vtk").string(), *m.mesh, r.coupling.states.local);
  write_history_csv((out / "history.csv").string(), opt.history);

  double umax = 0.0;
  for (const Vec3& v : r.composite.nonlocal_values) umax = std::max(umax, v.norm());
  for (const Vec3& v : r.composite.local_values) umax = std::max(umax, v.norm());

  nlohmann::json res;
  res["objective"] = r.coupling.objective;
  res["first_objective"] = r.first_objective;
  if (r.coupling.objective > 0.0) res["objective_reduction"] = r.first_objective / r.coupling.objective;
  res["gradient_norm"] = opt.gradient.norm();
  res["iterations"] = opt.iterations;
  res["converged"] = opt.converged;
  res["stop_reason"] = opt.reason;
  res["overlap_mismatch_rms"] = r.coupling.mismatch_rms;
  res["max_displacement"] = umax;
  res["overlap_weights"] = "point volumes";
  res["overlap_sample_volume"] = m.problem->selection().total_volume();
  res["state_solves"] = r.coupling.solves;
  res["bonds_removed_by_prenotch"] = m.bonds_removed;
  res["seconds"] = r.seconds + m.build_seconds;
  res["points"] = m.cloud->size();
  res["nodes"] = m.mesh->num_nodes();
  if (r.errors) {
    res["error_n"] = r.errors->l2_n;
    res["error_l"] = r.errors->l2_l;
    res["rms_error_n"] = r.errors->rms_n;
    res["rms_error_l"] = r.errors->rms_l;
  }
  for (const auto& [name, f] : r.reactions) res["reactions"][name] = {f[0], f[1], f[2]};
  if (!m.local_loads.tractions.empty())
    res["applied_traction_resultant"] = {r.applied_traction[0], r.applied_traction[1], r.applied_traction[2]};
  summary["result"] = res;
  write_json((out / "summary.json").string(), summary);

  log << std::setprecision(6) << "J* = " << r.coupling.objective << " (first iterate " << r.first_objective << "), "
      << opt.iterations << " iterations, " << (opt.converged ? "converged: " : "not converged: ") << opt.reason
      << "\noverlap mismatch RMS " << r.coupling.mismatch_rms << " mm, max displacement " << umax << " mm\n";
  if (r.errors)
    log << "error_n " << r.errors->l2_n << ", error_l " << r.errors->l2_l << " (l2 over dofs)\n";
  for (const auto& [name, f] : r.reactions)
    log << "reaction " << name << ": (" << f[0] << ", " << f[1] << ", " << f[2] << ") N\n";
  if (!m.local_loads.tractions.empty()) log << "applied traction resultant x: " << r.applied_traction[0] << " N\n";
  log << "artifacts written to " << cfg.output_dir << "\n";
  return opt.converged ? 0 : 4;
}

}  // namespace pdc
