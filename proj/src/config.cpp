#include "pdc/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace pdc {

namespace {

std::string config_message(const std::string& path, int line, const std::string& what) {
  std::ostringstream os;
  os << "config key '" << path << "'";
  if (line > 0) os << " (line " << line << ")";
  os << ": " << what;
  return os.str();
}

// Splits "value unit" into a number and a lower-cased unit suffix.
std::pair<double, std::string> split_quantity(const std::string& text) {
  std::istringstream is(text);
  double v = 0.0;
  if (!(is >> v)) throw ParameterError("cannot read a number from '" + text + "'");
  std::string unit;
  is >> unit;
  std::string rest;
  if (is >> rest) throw ParameterError("unexpected trailing text in '" + text + "'");
  return {v, unit};
}

Box make_box(double x0, double x1, double y0, double y1, double z0, double z1) {
  return Box{Vec3(x0, y0, z0), Vec3(x1, y1, z1)};
}

}  // namespace

ConfigError::ConfigError(const std::string& path, int line, const std::string& what)
    : Error(config_message(path, line, what)), path_(path), line_(line) {}

double parse_stress(const std::string& text) {
  auto [v, unit] = split_quantity(text);
  if (unit.empty() || unit == "MPa") return v;
  if (unit == "GPa") return v * 1e3;
  if (unit == "kPa") return v * 1e-3;
  if (unit == "Pa") return v * 1e-6;
  throw ParameterError("unknown stress unit '" + unit + "' (use Pa, kPa, MPa or GPa)");
}

double parse_length(const std::string& text) {
  auto [v, unit] = split_quantity(text);
  if (unit.empty() || unit == "mm") return v;
  if (unit == "cm") return v * 10.0;
  if (unit == "m") return v * 1e3;
  if (unit == "um") return v * 1e-3;
  throw ParameterError("unknown length unit '" + unit + "' (use um, mm, cm or m)");
}

const char* to_string(PartialVolumeRule r) { return r == PartialVolumeRule::Linear ? "linear" : "full"; }
const char* to_string(GeometryKind k) { return k == GeometryKind::UnitCube ? "unit-cube" : "explicit"; }

double layer_thickness(const Box& layer, const BoxUnion& domain) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Box& b : domain.boxes()) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  double t = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double extent = layer.hi[a] - layer.lo[a];
    const double tol = 1e-9 * std::max(1.0, hi[a] - lo[a]);
    if (layer.lo[a] <= lo[a] + tol && layer.hi[a] >= hi[a] - tol) continue;
    t = std::min(t, extent);
  }
  return t;
}

GeometryConfig unit_cube_geometry(double h, double horizon, const UnitCubeConfig& layout) {
  const double a = layout.nonlocal_extent, c = layout.local_start, L = 2.0 * horizon;
  if (!(a > 0.0 && a + L <= 1.0 + 1e-12))
    throw ParameterError("unit cube: the nonlocal part [0, a] plus its 2*horizon control layer must fit in [0, 1]");
  // The overlap must reach free nonlocal points; otherwise the nonlocal control
  // layer alone can absorb every mismatch and the minimizer is not unique.
  if (!(c >= 0.0 && c < a)) throw ParameterError("unit cube: local_start must lie in [0, nonlocal_extent)");
  (void)h;
  GeometryConfig g;
  const double e = a + L;
  g.nonlocal_domain = BoxUnion({make_box(-L, e, -L, 1 + L, -L, 1 + L)});
  g.local_domain = BoxUnion({make_box(c, 1, 0, 1, 0, 1)});
  g.body = BoxUnion({make_box(0, 1, 0, 1, 0, 1)});
  g.regions.interior = BoxUnion({make_box(0, a, 0, 1, 0, 1)});
  g.regions.control = BoxUnion({make_box(a, e, 0, 1, 0, 1)});
  g.regions.dirichlet = BoxUnion({
      make_box(-L, 0, -L, 1 + L, -L, 1 + L),
      make_box(-L, e, -L, 0, -L, 1 + L),
      make_box(-L, e, 1, 1 + L, -L, 1 + L),
      make_box(-L, e, -L, 1 + L, -L, 0),
      make_box(-L, e, -L, 1 + L, 1, 1 + L),
  });
  g.regions.overlap = g.local_domain;
  g.regions.node_sets = {
      {kGammaD, BoxUnion({make_box(1, 1, 0, 1, 0, 1), make_box(c, 1, 0, 0, 0, 1), make_box(c, 1, 1, 1, 0, 1),
                          make_box(c, 1, 0, 1, 0, 0), make_box(c, 1, 0, 1, 1, 1)})},
      {kGammaC, BoxUnion({make_box(c, c, 0, 1, 0, 1)})},
  };
  return g;
}

GeometryConfig ExperimentConfig::resolved_geometry(double h_level, double horizon_level) const {
  if (geometry_kind == GeometryKind::UnitCube) return unit_cube_geometry(h_level, horizon_level, unit_cube);
  return geometry;
}

void ExperimentConfig::validate() {
  if (!(h > 0.0)) throw ParameterError("grid spacing h must be positive");
  if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
  material.validate();
  solver.validate();
  optimizer.validate();
  if (field != "none" && field != "linear-I" && field != "quadratic-II")
    throw ParameterError("unknown field '" + field + "' (expected none, linear-I or quadratic-II)");

  warnings.clear();
  std::vector<std::pair<double, double>> checks{{h, horizon}};
  if (experiment == "converge") {
    if (converge.levels.size() < 3) throw ParameterError("a convergence study needs at least three levels");
    for (std::size_t k = 1; k < converge.levels.size(); ++k)
      if (!(converge.levels[k] < converge.levels[k - 1]))
        throw ParameterError("convergence levels must have strictly decreasing h");
    if (!(converge.ratio > 0.0)) throw ParameterError("converge.ratio must be positive");
    checks.clear();
    for (double hl : converge.levels)
      checks.emplace_back(hl, converge.policy == DeltaPolicy::FixedDelta ? horizon : converge.ratio * hl);
  }

  for (const auto& [hl, dl] : checks) {
    if (dl < 2.0 * hl * (1.0 - 1e-12)) {
      std::ostringstream os;
      os << "horizon " << dl << " mm is below 2h = " << 2.0 * hl << " mm; families will be very small";
      warnings.push_back(os.str());
    }
    const GeometryConfig g = resolved_geometry(hl, dl);
    g.nonlocal_domain.validate();
    g.local_domain.validate();
    if (g.prenotch) g.prenotch->validate();
    const double need = 2.0 * dl;
    auto check_layers = [&](const BoxUnion& layers, const char* name) {
      for (std::size_t b = 0; b < layers.boxes().size(); ++b) {
        const double t = layer_thickness(layers.boxes()[b], g.nonlocal_domain);
        if (t < need - 1e-9 * hl) {
          std::ostringstream os;
          os << name << " layer box #" << b << " is " << t << " mm thick; it must be at least 2*horizon = " << need
             << " mm";
          throw ParameterError(os.str());
        }
      }
    };
    check_layers(g.regions.control, "control");
    check_layers(g.regions.dirichlet, "dirichlet");
  }
}

ExperimentConfig canned_config(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  // Every state matrix is reused for thousands of solves, so factor once.
  c.solver.method = SolverMethod::SparseDirect;
  c.optimizer.memory = 250;
  c.optimizer.max_iterations = 5000;
  if (experiment == "patch-test" || experiment == "converge") {
    // Manufactured data admit an exact match; drive the mismatch to roundoff.
    c.solver.tolerance = 1e-13;
    c.optimizer.gradient_tolerance = 1e-15;
    c.optimizer.objective_tolerance = 1e-30;
    c.material = MaterialParams::from_lame(109.62, 73.08);
    c.geometry_kind = GeometryKind::UnitCube;
    if (experiment == "patch-test") {
      c.field = "linear-I";
      c.h = 1.0 / 8.0;
      c.horizon = 3.0 * c.h;
      c.unit_cube = {0.25, 0.125};
    } else {
      c.field = "quadratic-II";
      c.horizon = 0.25;
      c.converge.levels = {1.0 / 12.0, 1.0 / 16.0, 1.0 / 20.0};
      c.h = c.converge.levels.front();
      // The local mesh spans the whole cube so 1 - c divides every level.
      c.unit_cube = {0.25, 0.0};
      // The optimum keeps a discretization mismatch; stop once the gradient stalls.
      c.optimizer.gradient_tolerance = 1e-9;
    }
    c.output_dir = "pdc-" + experiment;
    return c;
  }
  if (experiment == "bar-dirichlet" || experiment == "bar-neumann") {
    c.material = MaterialParams::from_bulk_poisson(140e3, 0.3);
    c.h = 0.5;
    c.horizon = 1.0;
    c.geometry_kind = GeometryKind::Explicit;
    // The optimum keeps a model mismatch near the notch; J flattens long before
    // the gradient reaches roundoff.
    c.optimizer.gradient_tolerance = 1e-5;
    GeometryConfig& g = c.geometry;
    const double Y0 = -4, Y1 = 4, Z0 = -2, Z1 = 2;
    g.prenotch = PrenotchPlane{0, 0.0, {1.0, 4.0}, {-2.0, 2.0}};
    if (experiment == "bar-dirichlet") {
      g.nonlocal_domain = BoxUnion({make_box(-5, 5, Y0, Y1, Z0, Z1)});
      g.body = BoxUnion({make_box(-18, 18, Y0, Y1, Z0, Z1)});
      g.local_domain = BoxUnion({make_box(-18, -2, Y0, Y1, Z0, Z1), make_box(2, 18, Y0, Y1, Z0, Z1)});
      g.regions.interior = BoxUnion({make_box(-3, 3, Y0, Y1, Z0, Z1)});
      g.regions.control = BoxUnion({make_box(-5, -3, Y0, Y1, Z0, Z1), make_box(3, 5, Y0, Y1, Z0, Z1)});
      g.regions.overlap = BoxUnion({make_box(-5, -2, Y0, Y1, Z0, Z1), make_box(2, 5, Y0, Y1, Z0, Z1)});
      g.regions.node_sets = {
          {"gamma_d_left", BoxUnion({make_box(-18, -18, Y0, Y1, Z0, Z1)})},
          {"gamma_d_right", BoxUnion({make_box(18, 18, Y0, Y1, Z0, Z1)})},
          {kGammaC, BoxUnion({make_box(-2, -2, Y0, Y1, Z0, Z1), make_box(2, 2, Y0, Y1, Z0, Z1)})},
          {"fix_y", BoxUnion({make_box(-18, -18, Y0, Y0, Z0, Z1), make_box(18, 18, Y0, Y0, Z0, Z1)})},
          {"fix_z", BoxUnion({make_box(-18, -18, Y0, Y1, Z0, Z0), make_box(18, 18, Y0, Y1, Z0, Z0)})},
      };
      c.dirichlet = {
          {"gamma_d_left", {true, false, false}, Vec3(-0.05, 0, 0)},
          {"gamma_d_right", {true, false, false}, Vec3(0.05, 0, 0)},
          {"fix_y", {false, true, false}, Vec3::Zero()},
          {"fix_z", {false, false, true}, Vec3::Zero()},
      };
    } else {
      g.nonlocal_domain = BoxUnion({make_box(-16, 16, Y0, Y1, Z0, Z1)});
      g.body = g.nonlocal_domain;
      g.local_domain = BoxUnion({make_box(-16, -8, Y0, Y1, Z0, Z1), make_box(8, 16, Y0, Y1, Z0, Z1)});
      g.regions.interior = BoxUnion({make_box(-14, 14, Y0, Y1, Z0, Z1)});
      g.regions.control = BoxUnion({make_box(-16, -14, Y0, Y1, Z0, Z1), make_box(14, 16, Y0, Y1, Z0, Z1)});
      g.regions.overlap = g.local_domain;
      g.regions.node_sets = {
          {"gamma_d_left", BoxUnion({make_box(-16, -16, Y0, Y1, Z0, Z1)})},
          {"gamma_d_right", BoxUnion({make_box(16, 16, Y0, Y1, Z0, Z1)})},
          {kGammaC, BoxUnion({make_box(-8, -8, Y0, Y1, Z0, Z1), make_box(8, 8, Y0, Y1, Z0, Z1)})},
          {"fix_y", BoxUnion({make_box(16, 16, Y0, Y0, Z0, Z1)})},
          {"fix_z", BoxUnion({make_box(16, 16, Y0, Y1, Z0, Z0)})},
      };
      g.regions.face_sets = {{"loaded_end", BoxUnion({make_box(-16, -16, Y0, Y1, Z0, Z1)})}};
      c.dirichlet = {
          {"gamma_d_right", {true, false, false}, Vec3::Zero()},
          {"fix_y", {false, true, false}, Vec3::Zero()},
          {"fix_z", {false, false, true}, Vec3::Zero()},
      };
      c.tractions = {{"loaded_end", Vec3(-1700.0, 0, 0)}};
    }
    c.output_dir = "pdc-" + experiment;
    return c;
  }
  if (experiment == "custom") return c;
  throw ParameterError("unknown experiment '" + experiment +
                       "' (expected patch-test, converge, bar-dirichlet, bar-neumann or custom)");
}

// ---------------------------------------------------------------------------
// YAML ingestion

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& path, const std::string& what) const {
    const int line = n.IsDefined() ? n.Mark().line + 1 : 0;
    throw ConfigError(path, line, what + " [" + source_ + "]");
  }

  void require_map(const YAML::Node& n, const std::string& path) const {
    if (!n.IsMap()) fail(n, path, "expected a mapping");
  }

  void check_keys(const YAML::Node& n, const std::string& path, const std::set<std::string>& allowed) const {
    require_map(n, path);
    for (const auto& kv : n) {
      const std::string key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        const int line = kv.first.Mark().line + 1;
        throw ConfigError(path.empty() ? key : path + "." + key, line, "unknown key [" + source_ + "]");
      }
    }
  }

  std::string scalar(const YAML::Node& n, const std::string& path) const {
    if (!n.IsScalar()) fail(n, path, "expected a scalar");
    return n.as<std::string>();
  }

  double number(const YAML::Node& n, const std::string& path) const {
    const std::string s = scalar(n, path);
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) fail(n, path, "expected a number, got '" + s + "'");
      return v;
    } catch (const std::logic_error&) {
      fail(n, path, "expected a number, got '" + s + "'");
    }
  }

  long integer(const YAML::Node& n, const std::string& path) const {
    const double v = number(n, path);
    if (v != std::floor(v)) fail(n, path, "expected an integer");
    return static_cast<long>(v);
  }

  bool boolean(const YAML::Node& n, const std::string& path) const {
    try {
      return n.as<bool>();
    } catch (const YAML::Exception&) {
      fail(n, path, "expected true or false");
    }
  }

  double length(const YAML::Node& n, const std::string& path) const {
    try {
      return parse_length(scalar(n, path));
    } catch (const ParameterError& e) {
      fail(n, path, e.what());
    }
  }

  double stress(const YAML::Node& n, const std::string& path) const {
    try {
      return parse_stress(scalar(n, path));
    } catch (const ParameterError& e) {
      fail(n, path, e.what());
    }
  }

  Vec3 triple(const YAML::Node& n, const std::string& path, bool as_stress) const {
    if (!n.IsSequence() || n.size() != 3) fail(n, path, "expected a list of three values");
    Vec3 v;
    for (int a = 0; a < 3; ++a) {
      const std::string p = path + "[" + std::to_string(a) + "]";
      v[a] = as_stress ? stress(n[a], p) : length(n[a], p);
    }
    return v;
  }

  BoxUnion boxes(const YAML::Node& n, const std::string& path, bool allow_flat) const {
    if (!n.IsSequence() || n.size() == 0) fail(n, path, "expected a non-empty list of boxes");
    std::vector<Box> out;
    for (std::size_t b = 0; b < n.size(); ++b) {
      const std::string p = path + "[" + std::to_string(b) + "]";
      check_keys(n[b], p, {"lo", "hi"});
      if (!n[b]["lo"] || !n[b]["hi"]) fail(n[b], p, "a box needs both lo and hi");
      Box box{triple(n[b]["lo"], p + ".lo", false), triple(n[b]["hi"], p + ".hi", false)};
      for (int a = 0; a < 3; ++a) {
        const bool ok = allow_flat ? box.lo[a] <= box.hi[a] : box.lo[a] < box.hi[a];
        if (!ok) fail(n[b], p, std::string("box has lo ") + (allow_flat ? ">" : ">=") + " hi along axis " + "xyz"[a]);
      }
      out.push_back(box);
    }
    return BoxUnion(std::move(out));
  }

  int axis(const YAML::Node& n, const std::string& path) const {
    const std::string s = scalar(n, path);
    if (s == "x") return 0;
    if (s == "y") return 1;
    if (s == "z") return 2;
    fail(n, path, "expected x, y or z");
  }

 private:
  std::string source_;
};

void read_material(const Reader& rd, const YAML::Node& n, ExperimentConfig& c) {
  const std::string path = "material";
  rd.check_keys(n, path, {"K", "nu", "G", "lambda", "mu"});
  const bool kn = n["K"] && n["nu"], kg = n["K"] && n["G"], lame = n["lambda"] && n["mu"];
  if (kn + kg + lame != 1 || n.size() != 2)
    rd.fail(n, path, "give exactly one of {K, nu}, {K, G} or {lambda, mu}");
  try {
    if (kn) {
      c.material = MaterialParams::from_bulk_poisson(rd.stress(n["K"], path + ".K"), rd.number(n["nu"], path + ".nu"));
    } else if (kg) {
      c.material = {rd.stress(n["K"], path + ".K"), rd.stress(n["G"], path + ".G")};
    } else {
      c.material = MaterialParams::from_lame(rd.stress(n["lambda"], path + ".lambda"), rd.stress(n["mu"], path + ".mu"));
    }
    c.material.validate();
  } catch (const ParameterError& e) {
    rd.fail(n, path, e.what());
  }
}

void read_geometry(const Reader& rd, const YAML::Node& n, ExperimentConfig& c) {
  const std::string path = "geometry";
  rd.check_keys(n, path,
                {"nonlocal_domain", "local_domain", "body", "interior", "dirichlet", "control", "overlap", "node_sets",
                 "face_sets", "prenotch"});
  GeometryConfig g;
  for (const char* key : {"nonlocal_domain", "local_domain", "interior", "control", "overlap"})
    if (!n[key]) rd.fail(n, path, std::string("missing required key '") + key + "'");
  g.nonlocal_domain = rd.boxes(n["nonlocal_domain"], path + ".nonlocal_domain", false);
  g.local_domain = rd.boxes(n["local_domain"], path + ".local_domain", false);
  if (n["body"]) g.body = rd.boxes(n["body"], path + ".body", false);
  g.regions.interior = rd.boxes(n["interior"], path + ".interior", false);
  g.regions.control = rd.boxes(n["control"], path + ".control", false);
  g.regions.overlap = rd.boxes(n["overlap"], path + ".overlap", false);
  if (n["dirichlet"]) g.regions.dirichlet = rd.boxes(n["dirichlet"], path + ".dirichlet", false);
  auto read_sets = [&](const char* key, std::vector<NodeSetSpec>& out) {
    if (!n[key]) return;
    const std::string p = path + "." + key;
    rd.require_map(n[key], p);
    for (const auto& kv : n[key]) {
      const std::string name = kv.first.as<std::string>();
      out.push_back({name, rd.boxes(kv.second, p + "." + name, true)});
    }
  };
  read_sets("node_sets", g.regions.node_sets);
  read_sets("face_sets", g.regions.face_sets);
  if (n["prenotch"]) {
    const YAML::Node pn = n["prenotch"];
    const std::string p = path + ".prenotch";
    rd.check_keys(pn, p, {"axis", "value", "first", "second"});
    for (const char* key : {"axis", "value", "first", "second"})
      if (!pn[key]) rd.fail(pn, p, std::string("missing required key '") + key + "'");
    PrenotchPlane plane;
    plane.axis = rd.axis(pn["axis"], p + ".axis");
    plane.value = rd.length(pn["value"], p + ".value");
    for (const char* key : {"first", "second"}) {
      const YAML::Node iv = pn[key];
      if (!iv.IsSequence() || iv.size() != 2) rd.fail(iv, p + "." + key, "expected an interval [lo, hi]");
      auto& dst = std::string(key) == "first" ? plane.first : plane.second;
      dst = {rd.length(iv[0], p + "." + key + "[0]"), rd.length(iv[1], p + "." + key + "[1]")};
    }
    try {
      plane.validate();
    } catch (const ParameterError& e) {
      rd.fail(pn, p, e.what());
    }
    g.prenotch = plane;
  }
  c.geometry = std::move(g);
  c.geometry_kind = GeometryKind::Explicit;
}

void read_loads(const Reader& rd, const YAML::Node& n, ExperimentConfig& c) {
  const std::string path = "loads";
  rd.check_keys(n, path, {"dirichlet", "tractions"});
  if (n["dirichlet"]) {
    const YAML::Node list = n["dirichlet"];
    if (!list.IsSequence()) rd.fail(list, path + ".dirichlet", "expected a list");
    c.dirichlet.clear();
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string p = path + ".dirichlet[" + std::to_string(k) + "]";
      rd.check_keys(list[k], p, {"set", "components", "value"});
      if (!list[k]["set"] || !list[k]["value"]) rd.fail(list[k], p, "needs 'set' and 'value'");
      DirichletCondition d;
      d.set = rd.scalar(list[k]["set"], p + ".set");
      d.value = rd.triple(list[k]["value"], p + ".value", false);
      if (list[k]["components"]) {
        d.components = {false, false, false};
        const YAML::Node cs = list[k]["components"];
        if (!cs.IsSequence() || cs.size() == 0) rd.fail(cs, p + ".components", "expected a list of axes");
        for (std::size_t a = 0; a < cs.size(); ++a) d.components[rd.axis(cs[a], p + ".components")] = true;
      }
      c.dirichlet.push_back(d);
    }
  }
  if (n["tractions"]) {
    const YAML::Node list = n["tractions"];
    if (!list.IsSequence()) rd.fail(list, path + ".tractions", "expected a list");
    c.tractions.clear();
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string p = path + ".tractions[" + std::to_string(k) + "]";
      rd.check_keys(list[k], p, {"set", "traction"});
      if (!list[k]["set"] || !list[k]["traction"]) rd.fail(list[k], p, "needs 'set' and 'traction'");
      c.tractions.push_back({rd.scalar(list[k]["set"], p + ".set"), rd.triple(list[k]["traction"], p + ".traction", true)});
    }
  }
}

ExperimentConfig read_root(const Reader& rd, const YAML::Node& root) {
  rd.check_keys(root, "",
                {"experiment", "h", "horizon", "material", "influence", "partial_volume", "sample_control_points",
                 "field", "solver", "optimizer", "output", "unit_cube", "converge", "geometry", "loads"});
  if (!root["experiment"]) rd.fail(root, "experiment", "missing required key");
  if (!root["material"]) rd.fail(root, "material", "missing required block");
  const std::string name = rd.scalar(root["experiment"], "experiment");
  ExperimentConfig c;
  try {
    c = canned_config(name);
  } catch (const ParameterError& e) {
    rd.fail(root["experiment"], "experiment", e.what());
  }
  if (name == "custom" && !root["geometry"]) rd.fail(root, "geometry", "a custom experiment needs a geometry block");

  read_material(rd, root["material"], c);
  if (root["h"]) c.h = rd.length(root["h"], "h");
  if (root["horizon"]) c.horizon = rd.length(root["horizon"], "horizon");
  if (root["influence"]) {
    const std::string s = rd.scalar(root["influence"], "influence");
    if (s == "constant") c.influence = InfluenceKind::Constant;
    else if (s == "inverse-distance") c.influence = InfluenceKind::InverseDistance;
    else rd.fail(root["influence"], "influence", "expected constant or inverse-distance");
  }
  if (root["partial_volume"]) {
    const std::string s = rd.scalar(root["partial_volume"], "partial_volume");
    if (s == "linear") c.partial_volume = PartialVolumeRule::Linear;
    else if (s == "full") c.partial_volume = PartialVolumeRule::Full;
    else rd.fail(root["partial_volume"], "partial_volume", "expected linear or full");
  }
  if (root["sample_control_points"])
    c.sample_control_points = rd.boolean(root["sample_control_points"], "sample_control_points");
  if (root["field"]) c.field = rd.scalar(root["field"], "field");
  if (root["output"]) c.output_dir = rd.scalar(root["output"], "output");

  if (const YAML::Node s = root["solver"]) {
    rd.check_keys(s, "solver", {"method", "tolerance", "max_iterations"});
    try {
      if (s["method"]) c.solver.method = solver_method_from_string(rd.scalar(s["method"], "solver.method"));
    } catch (const ParameterError& e) {
      rd.fail(s["method"], "solver.method", e.what());
    }
    if (s["tolerance"]) c.solver.tolerance = rd.number(s["tolerance"], "solver.tolerance");
    if (s["max_iterations"]) c.solver.max_iterations = rd.integer(s["max_iterations"], "solver.max_iterations");
  }
  if (const YAML::Node o = root["optimizer"]) {
    rd.check_keys(o, "optimizer",
                  {"gradient_tolerance", "objective_tolerance", "objective_floor", "max_iterations", "memory", "c1",
                   "c2", "initial_step", "max_line_search"});
    auto num = [&](const char* k, double& dst) {
      if (o[k]) dst = rd.number(o[k], std::string("optimizer.") + k);
    };
    num("gradient_tolerance", c.optimizer.gradient_tolerance);
    num("objective_tolerance", c.optimizer.objective_tolerance);
    num("objective_floor", c.optimizer.objective_floor);
    num("c1", c.optimizer.c1);
    num("c2", c.optimizer.c2);
    num("initial_step", c.optimizer.initial_step);
    if (o["max_iterations"]) c.optimizer.max_iterations = rd.integer(o["max_iterations"], "optimizer.max_iterations");
    if (o["memory"]) c.optimizer.memory = static_cast<int>(rd.integer(o["memory"], "optimizer.memory"));
    if (o["max_line_search"])
      c.optimizer.max_line_search = static_cast<int>(rd.integer(o["max_line_search"], "optimizer.max_line_search"));
  }
  if (const YAML::Node u = root["unit_cube"]) {
    rd.check_keys(u, "unit_cube", {"nonlocal_extent", "local_start"});
    if (u["nonlocal_extent"]) c.unit_cube.nonlocal_extent = rd.length(u["nonlocal_extent"], "unit_cube.nonlocal_extent");
    if (u["local_start"]) c.unit_cube.local_start = rd.length(u["local_start"], "unit_cube.local_start");
  }
  if (const YAML::Node cv = root["converge"]) {
    rd.check_keys(cv, "converge", {"levels", "delta_policy", "ratio"});
    if (cv["levels"]) {
      if (!cv["levels"].IsSequence()) rd.fail(cv["levels"], "converge.levels", "expected a list of spacings");
      c.converge.levels.clear();
      for (std::size_t k = 0; k < cv["levels"].size(); ++k)
        c.converge.levels.push_back(rd.length(cv["levels"][k], "converge.levels"));
      if (!c.converge.levels.empty() && !root["h"]) c.h = c.converge.levels.front();
    }
    if (cv["delta_policy"]) {
      try {
        c.converge.policy = delta_policy_from_string(rd.scalar(cv["delta_policy"], "converge.delta_policy"));
      } catch (const ParameterError& e) {
        rd.fail(cv["delta_policy"], "converge.delta_policy", e.what());
      }
    }
    if (cv["ratio"]) c.converge.ratio = rd.number(cv["ratio"], "converge.ratio");
  }
  if (root["geometry"]) read_geometry(rd, root["geometry"], c);
  if (root["loads"]) read_loads(rd, root["loads"], c);

  try {
    c.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("<validation>", 0, e.what());
  }
  return c;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("<document>", e.mark.line + 1, std::string("YAML syntax error: ") + e.msg + " [" + source + "]");
  }
  if (!root.IsMap()) throw ConfigError("<document>", 0, "expected a mapping at the top level [" + source + "]");
  return read_root(Reader(source), root);
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", 0, "cannot read configuration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

}  // namespace pdc
