#include "pdc/io.hpp"

#include <cstdio>
#include <fstream>

namespace pdc {

namespace {

std::ofstream open_for_writing(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

// Fixed formatting keeps output byte-identical across runs.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

void write_vectors(std::ostream& out, const char* name, const VectorXd& v, Index n) {
  out << "VECTORS " << name << " double\n";
  for (Index i = 0; i < n; ++i) out << num(v[3 * i]) << ' ' << num(v[3 * i + 1]) << ' ' << num(v[3 * i + 2]) << '\n';
}

nlohmann::json boxes_json(const BoxUnion& u) {
  nlohmann::json a = nlohmann::json::array();
  for (const Box& b : u.boxes())
    a.push_back({{"lo", {b.lo[0], b.lo[1], b.lo[2]}}, {"hi", {b.hi[0], b.hi[1], b.hi[2]}}});
  return a;
}

}  // namespace

void write_cloud_vtk(const std::string& path, const PointCloud& cloud, const VectorXd& displacement,
                     const VectorXd& force_density) {
  const Index n = cloud.size();
  if (displacement.size() != 3 * n || force_density.size() != 3 * n)
    throw ShapeError("cloud VTK: field lengths do not match the point count");
  auto out = open_for_writing(path);
  out << "# vtk DataFile Version 3.0\nnonlocal material points\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << n << " double\n";
  for (const Vec3& x : cloud.positions) out << num(x[0]) << ' ' << num(x[1]) << ' ' << num(x[2]) << '\n';
  out << "CELLS " << n << ' ' << 2 * n << '\n';
  for (Index i = 0; i < n; ++i) out << "1 " << i << '\n';
  out << "CELL_TYPES " << n << '\n';
  for (Index i = 0; i < n; ++i) out << "1\n";
  out << "POINT_DATA " << n << '\n';
  write_vectors(out, "displacement", displacement, n);
  write_vectors(out, "force_density", force_density, n);
  out << "SCALARS region int 1\nLOOKUP_TABLE default\n";
  for (Region r : cloud.tags) out << static_cast<int>(r) << '\n';
  out << "SCALARS volume double 1\nLOOKUP_TABLE default\n";
  for (double v : cloud.volumes) out << num(v) << '\n';
  if (!out) throw Error("failed while writing '" + path + "'");
}

void write_mesh_vtk(const std::string& path, const HexMesh& mesh, const VectorXd& displacement) {
  const Index n = mesh.num_nodes(), c = mesh.num_cells();
  if (displacement.size() != 3 * n) throw ShapeError("mesh VTK: displacement length does not match the node count");
  auto out = open_for_writing(path);
  out << "# vtk DataFile Version 3.0\nlocal hexahedral mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << n << " double\n";
  for (const Vec3& x : mesh.nodes) out << num(x[0]) << ' ' << num(x[1]) << ' ' << num(x[2]) << '\n';
  out << "CELLS " << c << ' ' << 9 * c << '\n';
  for (const auto& cell : mesh.cells) {
    out << '8';
    for (Index v : cell) out << ' ' << v;
    out << '\n';
  }
  out << "CELL_TYPES " << c << '\n';
  for (Index i = 0; i < c; ++i) out << "12\n";
  out << "POINT_DATA " << n << '\n';
  write_vectors(out, "displacement", displacement, n);
  if (!out) throw Error("failed while writing '" + path + "'");
}

void write_convergence_csv(const std::string& path, const ConvergenceReport& report, bool rms) {
  auto out = open_for_writing(path);
  const auto h = report.spacings();
  const auto en = report.errors_n(rms), el = report.errors_l(rms);
  out << "h,error_n,error_l,rate_n,rate_l\n";
  for (std::size_t k = 0; k < h.size(); ++k) {
    out << num(h[k]) << ',' << num(en[k]) << ',' << num(el[k]) << ',';
    if (k > 0) {
      out << num(std::log(en[k - 1] / en[k]) / std::log(h[k - 1] / h[k])) << ','
          << num(std::log(el[k - 1] / el[k]) / std::log(h[k - 1] / h[k]));
    } else {
      out << ',';
    }
    out << '\n';
  }
  if (!out) throw Error("failed while writing '" + path + "'");
}

void write_history_csv(const std::string& path, const std::vector<IterationRecord>& history) {
  auto out = open_for_writing(path);
  out << "iteration,objective,gradient_norm,step\n";
  for (const auto& r : history)
    out << r.iteration << ',' << num(r.objective) << ',' << num(r.gradient_norm) << ',' << num(r.step) << '\n';
  if (!out) throw Error("failed while writing '" + path + "'");
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["experiment"] = cfg.experiment;
  j["h"] = cfg.h;
  j["horizon"] = cfg.horizon;
  j["material"] = {{"K", cfg.material.K},
                   {"G", cfg.material.G},
                   {"lambda", cfg.material.lambda()},
                   {"mu", cfg.material.mu()},
                   {"nu", cfg.material.poisson()},
                   {"unit", "MPa"}};
  j["influence"] = to_string(cfg.influence);
  j["partial_volume"] = to_string(cfg.partial_volume);
  j["sample_control_points"] = cfg.sample_control_points;
  j["field"] = cfg.field;
  j["solver"] = {{"method", to_string(cfg.solver.method)},
                 {"tolerance", cfg.solver.tolerance},
                 {"max_iterations", cfg.solver.max_iterations}};
  j["optimizer"] = {{"gradient_tolerance", cfg.optimizer.gradient_tolerance},
                    {"objective_tolerance", cfg.optimizer.objective_tolerance},
                    {"objective_floor", cfg.optimizer.objective_floor},
                    {"max_iterations", cfg.optimizer.max_iterations},
                    {"memory", cfg.optimizer.memory},
                    {"c1", cfg.optimizer.c1},
                    {"c2", cfg.optimizer.c2},
                    {"initial_step", cfg.optimizer.initial_step},
                    {"max_line_search", cfg.optimizer.max_line_search}};
  j["output"] = cfg.output_dir;
  j["geometry_kind"] = to_string(cfg.geometry_kind);
  if (cfg.geometry_kind == GeometryKind::UnitCube) {
    j["unit_cube"] = {{"nonlocal_extent", cfg.unit_cube.nonlocal_extent}, {"local_start", cfg.unit_cube.local_start}};
  } else {
    const GeometryConfig& g = cfg.geometry;
    nlohmann::json gj;
    gj["nonlocal_domain"] = boxes_json(g.nonlocal_domain);
    gj["local_domain"] = boxes_json(g.local_domain);
    if (g.body) gj["body"] = boxes_json(*g.body);
    gj["interior"] = boxes_json(g.regions.interior);
    gj["control"] = boxes_json(g.regions.control);
    gj["overlap"] = boxes_json(g.regions.overlap);
    if (!g.regions.dirichlet.empty()) gj["dirichlet"] = boxes_json(g.regions.dirichlet);
    for (const auto& s : g.regions.node_sets) gj["node_sets"][s.name] = boxes_json(s.region);
    for (const auto& s : g.regions.face_sets) gj["face_sets"][s.name] = boxes_json(s.region);
    if (g.prenotch) {
      const auto& p = *g.prenotch;
      gj["prenotch"] = {{"axis", std::string(1, "xyz"[p.axis])},
                        {"value", p.value},
                        {"first", {p.first[0], p.first[1]}},
                        {"second", {p.second[0], p.second[1]}}};
    }
    j["geometry"] = gj;
  }
  if (cfg.experiment == "converge") {
    j["converge"] = {{"levels", cfg.converge.levels},
                     {"delta_policy", to_string(cfg.converge.policy)},
                     {"ratio", cfg.converge.ratio}};
  }
  nlohmann::json loads;
  for (const auto& d : cfg.dirichlet) {
    nlohmann::json comps = nlohmann::json::array();
    for (int a = 0; a < 3; ++a)
      if (d.components[a]) comps.push_back(std::string(1, "xyz"[a]));
    loads["dirichlet"].push_back({{"set", d.set}, {"components", comps}, {"value", {d.value[0], d.value[1], d.value[2]}}});
  }
  for (const auto& t : cfg.tractions)
    loads["tractions"].push_back({{"set", t.set}, {"traction", {t.traction[0], t.traction[1], t.traction[2]}}});
  if (!loads.is_null()) j["loads"] = loads;
  if (!cfg.warnings.empty()) j["warnings"] = cfg.warnings;
  return j;
}

nlohmann::json report_to_json(const ConvergenceReport& report) {
  nlohmann::json j;
  for (const auto& l : report.levels) {
    j["levels"].push_back({{"h", l.h},
                           {"horizon", l.horizon},
                           {"error_n", l.errors.l2_n},
                           {"error_l", l.errors.l2_l},
                           {"rms_error_n", l.errors.rms_n},
                           {"rms_error_l", l.errors.rms_l},
                           {"objective", l.objective},
                           {"iterations", l.iterations},
                           {"converged", l.converged},
                           {"seconds", l.seconds}});
  }
  if (report.levels.size() >= 3) {
    j["rate_n"] = report.rate_n(false);
    j["rate_l"] = report.rate_l(false);
    j["rms_rate_n"] = report.rate_n(true);
    j["rms_rate_l"] = report.rate_l(true);
  }
  return j;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  auto out = open_for_writing(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed while writing '" + path + "'");
}

}  // namespace pdc
