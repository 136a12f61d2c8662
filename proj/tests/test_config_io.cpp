#include "helpers.hpp"
#include "pdc/config.hpp"
#include "pdc/experiment.hpp"
#include "pdc/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pdc;
using pdc::test::cube;

namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pdc-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Geometry block of the Dirichlet bar with the control layers given as [x0, x1] on each side.
std::string bar_yaml(double inner) {
  std::ostringstream os;
  os << "experiment: bar-dirichlet\n"
        "material: {K: 140 GPa, nu: 0.3}\n"
        "horizon: 1 mm\n"
        "geometry:\n"
        "  nonlocal_domain: [{lo: [-5, -4, -2], hi: [5, 4, 2]}]\n"
        "  body: [{lo: [-18, -4, -2], hi: [18, 4, 2]}]\n"
        "  local_domain: [{lo: [-18, -4, -2], hi: [-2, 4, 2]}, {lo: [2, -4, -2], hi: [18, 4, 2]}]\n"
        "  interior: [{lo: [" << -inner << ", -4, -2], hi: [" << inner << ", 4, 2]}]\n"
        "  control: [{lo: [-5, -4, -2], hi: [" << -inner << ", 4, 2]}, {lo: [" << inner
     << ", -4, -2], hi: [5, 4, 2]}]\n"
        "  overlap: [{lo: [-5, -4, -2], hi: [-2, 4, 2]}, {lo: [2, -4, -2], hi: [5, 4, 2]}]\n";
  return os.str();
}

}  // namespace

TEST_CASE("unit conversions") {
  CHECK(parse_stress("140 GPa") == doctest::Approx(140000.0));
  CHECK(parse_stress("-1700 MPa") == doctest::Approx(-1700.0));
  CHECK(parse_stress("2e5 kPa") == doctest::Approx(200.0));
  CHECK(parse_stress("12.5") == doctest::Approx(12.5));
  CHECK(parse_length("0.1 cm") == doctest::Approx(1.0));
  CHECK(parse_length("3") == doctest::Approx(3.0));
  CHECK_THROWS_AS(parse_stress("3 psi"), ParameterError);
  CHECK_THROWS_AS(parse_length("1 furlong"), ParameterError);
}

TEST_CASE("bar material from bulk modulus and Poisson ratio") {
  const ExperimentConfig c = parse_config_text("experiment: bar-dirichlet\nmaterial: {K: 140 GPa, nu: 0.3}\n");
  CHECK(c.material.K == doctest::Approx(140000.0).epsilon(1e-15));
  CHECK(c.material.G == doctest::Approx(3 * 140000.0 * (1 - 0.6) / (2 * 1.3)).epsilon(1e-14));
  CHECK(c.material.G == doctest::Approx(64615.4).epsilon(1e-6));
  CHECK(c.material.poisson() == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(c.horizon == doctest::Approx(1.0));
}

TEST_CASE("control layer thinner than twice the horizon is a hard error") {
  CHECK_NOTHROW(parse_config_text(bar_yaml(3.0)));
  try {
    parse_config_text(bar_yaml(3.5));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("1.5") != std::string::npos);
  }
}

TEST_CASE("schema errors carry the key path and line") {
  try {
    parse_config_text("experiment: patch-test\nh: 0.125\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key_path() == "material");
  }
  try {
    parse_config_text("experiment: patch-test\nmaterial: {lambda: 1, mu: 1}\nsolver:\n  method: cg\n  tolerence: 1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() >= 4);
  }
  CHECK_THROWS_AS(parse_config_text("experiment: patch-test\nmaterial: {lambda: 1, mu: 1}\nsolver: {method: cg}\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text("experiment: warp-drive\nmaterial: {lambda: 1, mu: 1}\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("experiment: [\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("/nonexistent/config.yaml"), ConfigError);
}

TEST_CASE("overrides reach the experiment config") {
  const ExperimentConfig c = parse_config_text(
      "experiment: patch-test\n"
      "material: {lambda: 109.62, mu: 73.08}\n"
      "horizon: 0.25\n"
      "influence: inverse-distance\n"
      "sample_control_points: false\n"
      "solver: {method: cg-jacobi, tolerance: 1e-11}\n"
      "optimizer: {memory: 7, gradient_tolerance: 1e-6}\n");
  CHECK(c.horizon == doctest::Approx(0.25));
  CHECK(c.influence == InfluenceKind::InverseDistance);
  CHECK_FALSE(c.sample_control_points);
  CHECK(c.solver.method == SolverMethod::CgJacobi);
  CHECK(c.solver.tolerance == doctest::Approx(1e-11));
  CHECK(c.optimizer.memory == 7);
  CHECK(c.material.lambda() == doctest::Approx(109.62).epsilon(1e-13));
  const nlohmann::json j = config_to_json(c);
  CHECK(j["solver"]["method"] == "cg-jacobi");
  CHECK(j["sample_control_points"] == false);
}

TEST_CASE("cloud VTK output") {
  const PointCloud c = generate_point_cloud(cube(0, 1), 0.5);
  const VectorXd u = pdc::test::random_field(24, 4), f = pdc::test::random_field(24, 5);
  const fs::path dir = scratch("vtk");
  write_cloud_vtk((dir / "a.vtk").string(), c, u, f);
  write_cloud_vtk((dir / "b.vtk").string(), c, u, f);
  const std::string text = read_file(dir / "a.vtk");
  CHECK(text == read_file(dir / "b.vtk"));

  std::istringstream in(text);
  std::string line;
  int points = -1, vectors = 0;
  std::vector<Vec3> pos, disp;
  while (std::getline(in, line)) {
    if (line.rfind("POINTS ", 0) == 0) {
      points = std::stoi(line.substr(7));
      for (int k = 0; k < points; ++k) {
        Vec3 x;
        in >> x[0] >> x[1] >> x[2];
        pos.push_back(x);
      }
    } else if (line.rfind("VECTORS displacement", 0) == 0) {
      ++vectors;
      for (int k = 0; k < 8; ++k) {
        Vec3 x;
        in >> x[0] >> x[1] >> x[2];
        disp.push_back(x);
      }
    } else if (line.rfind("VECTORS ", 0) == 0) {
      ++vectors;
    }
  }
  CHECK(points == 8);
  CHECK(vectors == 2);
  REQUIRE(disp.size() == 8);
  for (int k = 0; k < 8; ++k) {
    CHECK((pos[k] - c.positions[k]).norm() <= 1e-12);
    CHECK((disp[k] - u.segment<3>(3 * k)).norm() <= 1e-11);
  }
  CHECK_THROWS_AS(write_cloud_vtk((dir / "c.vtk").string(), c, u.head(3), f), ShapeError);

  const HexMesh m = generate_hex_mesh(cube(0, 1), 0.5);
  write_mesh_vtk((dir / "m.vtk").string(), m, VectorXd::Zero(3 * m.num_nodes()));
  CHECK(read_file(dir / "m.vtk").find("CELLS 8 72") != std::string::npos);
}

TEST_CASE("convergence CSV") {
  ConvergenceReport rep;
  for (double h : {0.25, 0.125, 0.0625}) {
    ConvergenceLevel l;
    l.h = h;
    l.errors.l2_n = h;
    l.errors.l2_l = h * h;
    rep.levels.push_back(l);
  }
  const fs::path dir = scratch("csv");
  write_convergence_csv((dir / "a.csv").string(), rep, false);
  write_convergence_csv((dir / "b.csv").string(), rep, false);
  const std::string text = read_file(dir / "a.csv");
  CHECK(text == read_file(dir / "b.csv"));
  std::istringstream in(text);
  std::string header, row;
  std::getline(in, header);
  CHECK(header == "h,error_n,error_l,rate_n,rate_l");
  std::vector<std::string> rows;
  while (std::getline(in, row)) rows.push_back(row);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].substr(rows[0].size() - 2) == ",,");
  std::vector<std::string> cells;
  std::stringstream cs(rows[2]);
  for (std::string cell; std::getline(cs, cell, ',');) cells.push_back(cell);
  REQUIRE(cells.size() == 5);
  CHECK(std::stod(cells[3]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::stod(cells[4]) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("patch-test run writes artifacts and a machine-accurate summary") {
  ExperimentConfig c = canned_config("patch-test");
  const fs::path dir = scratch("run");
  c.output_dir = dir.string();
  c.validate();
  std::ostringstream log;
  CHECK(run_experiment(c, log) == 0);
  for (const char* f : {"summary.json", "nonlocal.vtk", "local.vtk", "history.csv"}) CHECK(fs::exists(dir / f));
  const nlohmann::json j = nlohmann::json::parse(read_file(dir / "summary.json"));
  CHECK(j["result"]["converged"] == true);
  CHECK(j["result"]["overlap_mismatch_rms"].get<double>() <= 1e-9);
  CHECK(j["result"]["error_n"].get<double>() <= 1e-9);
  CHECK(j["result"]["error_l"].get<double>() <= 1e-9);
  CHECK(j["config"]["experiment"] == "patch-test");
  CHECK(j["result"]["overlap_weights"] == "point volumes");
}
