#include "pdc/experiment.hpp"
#include "pdc/fem.hpp"
#include "pdc/io.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace pdc;

namespace {

using Triple = std::array<double, 3>;

BoxUnion make_domain(const Triple& lo, const Triple& hi) {
  return BoxUnion({Box{Vec3(lo[0], lo[1], lo[2]), Vec3(hi[0], hi[1], hi[2])}});
}

MatrixXd rows_of(const std::vector<Vec3>& x) {
  MatrixXd out(static_cast<Index>(x.size()), 3);
  for (std::size_t i = 0; i < x.size(); ++i) out.row(static_cast<Index>(i)) = x[i].transpose();
  return out;
}

InfluenceKind influence(const std::string& s) {
  if (s == "constant") return InfluenceKind::Constant;
  if (s == "inverse-distance") return InfluenceKind::InverseDistance;
  throw ParameterError("unknown influence function '" + s + "'");
}

struct Lattice {
  PointCloud cloud;
  Family family;
  InfluenceFunction kappa;
};

Lattice lattice(const Triple& lo, const Triple& hi, double h, double horizon, const std::string& kind) {
  Lattice l;
  l.cloud = generate_point_cloud(make_domain(lo, hi), h);
  l.family = build_families(l.cloud, horizon);
  l.kappa = {influence(kind), horizon};
  return l;
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::dict run(const std::string& source, const std::string& output_dir, bool is_path) {
  ExperimentConfig cfg = is_path ? parse_config(source) : parse_config_text(source);
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  std::ostringstream log;
  int status = 0;
  {
    py::gil_scoped_release release;
    status = run_experiment(cfg, log);
  }
  py::dict d;
  d["status"] = status;
  d["log"] = log.str();
  d["output_dir"] = cfg.output_dir;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Peridynamic / finite element optimization-based coupling";

  // Translators run newest first, so the base class goes in first.
  auto& base = py::register_exception<Error>(m, "PdcError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<SolverError>(m, "SolverError", base.ptr());

  m.def("point_cloud",
        [](const Triple& lo, const Triple& hi, double h) {
          const PointCloud c = generate_point_cloud(make_domain(lo, hi), h);
          return py::make_tuple(rows_of(c.positions), VectorXd(Eigen::Map<const VectorXd>(
                                                          c.volumes.data(), static_cast<Index>(c.volumes.size()))));
        },
        py::arg("lo"), py::arg("hi"), py::arg("h"), "Lattice points and volumes of a box.");

  m.def("lps_apply",
        [](const Triple& lo, const Triple& hi, double h, double horizon, double K, double G, const VectorXd& u,
           const std::string& kind) {
          const Lattice l = lattice(lo, hi, h, horizon, kind);
          const LpsOperator op(l.cloud, l.family, MaterialParams{K, G}, l.kappa);
          return VectorXd(op * u);
        },
        py::arg("lo"), py::arg("hi"), py::arg("h"), py::arg("horizon"), py::arg("K"), py::arg("G"), py::arg("u"),
        py::arg("influence") = "constant", "A u = -L u for a flat displacement vector over the box lattice.");

  m.def("lps_oracle",
        [](const Triple& lo, const Triple& hi, double h, double horizon, double K, double G, const VectorXd& u,
           const std::string& kind) {
          const Lattice l = lattice(lo, hi, h, horizon, kind);
          return lps_apply_oracle(l.cloud, l.family, MaterialParams{K, G}, l.kappa, u);
        },
        py::arg("lo"), py::arg("hi"), py::arg("h"), py::arg("horizon"), py::arg("K"), py::arg("G"), py::arg("u"),
        py::arg("influence") = "constant", "Nested-loop force density L u.");

  m.def("dilatation",
        [](const Triple& lo, const Triple& hi, double h, double horizon, const VectorXd& u, const std::string& kind) {
          const Lattice l = lattice(lo, hi, h, horizon, kind);
          return dilatation(l.cloud, l.family, l.kappa, weighted_volume(l.cloud, l.family, l.kappa), u);
        },
        py::arg("lo"), py::arg("hi"), py::arg("h"), py::arg("horizon"), py::arg("u"),
        py::arg("influence") = "constant");

  m.def("fem_stiffness",
        [](const Triple& lo, const Triple& hi, double h, double K, double G) {
          const HexMesh mesh = generate_hex_mesh(make_domain(lo, hi), h);
          return py::make_tuple(rows_of(mesh.nodes), assemble_stiffness(mesh, MaterialParams{K, G}).to_sparse());
        },
        py::arg("lo"), py::arg("hi"), py::arg("h"), py::arg("K"), py::arg("G"),
        "Mesh nodes and the assembled sparse stiffness of a box mesh.");

  m.def("canned_config", [](const std::string& name) { return to_python(config_to_json(canned_config(name))); },
        py::arg("experiment"));

  m.def("run_config", [](const std::string& path, const std::string& out) { return run(path, out, true); },
        py::arg("path"), py::arg("output_dir") = "", "Runs a YAML config file; returns status and log.");
  m.def("run_text", [](const std::string& text, const std::string& out) { return run(text, out, false); },
        py::arg("text"), py::arg("output_dir") = "");

  m.def("check_gradient",
        [](const std::string& text, int components, double step, unsigned seed) {
          ExperimentConfig cfg = parse_config_text(text);
          GradientCheck g;
          {
            py::gil_scoped_release release;
            g = check_gradient(cfg, components, step, seed);
          }
          py::dict d;
          d["components"] = g.components;
          d["analytic"] = g.analytic;
          d["finite_difference"] = g.finite_difference;
          d["max_relative_error"] = g.max_relative_error;
          return d;
        },
        py::arg("config_text"), py::arg("components") = 10, py::arg("step") = 1e-6, py::arg("seed") = 11);
}
