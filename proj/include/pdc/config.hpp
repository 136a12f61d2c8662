#pragma once

#include "pdc/geometry.hpp"
#include "pdc/linsolve.hpp"
#include "pdc/lps.hpp"
#include "pdc/optimizer.hpp"
#include "pdc/verification.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pdc {

/// Schema violation in a configuration file; carries the key path and line.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, int line, const std::string& what);
  const std::string& key_path() const { return path_; }
  int line() const { return line_; }

 private:
  std::string path_;
  int line_;
};

/// Converts "140 GPa", "-1700 MPa", "2e5 kPa" or a bare number (MPa) to MPa.
double parse_stress(const std::string& text);
/// Converts "1 mm", "0.1 cm" or a bare number (mm) to mm.
double parse_length(const std::string& text);

struct DirichletCondition {
  std::string set;
  std::array<bool, 3> components{true, true, true};
  Vec3 value = Vec3::Zero();  // mm
};

struct TractionCondition {
  std::string set;
  Vec3 traction = Vec3::Zero();  // MPa
};

struct GeometryConfig {
  BoxUnion nonlocal_domain;
  BoxUnion local_domain;
  /// Physical body; clips the coverage check (free surfaces). Defaults to the nonlocal domain.
  std::optional<BoxUnion> body;
  Decomposition regions;
  std::optional<PrenotchPlane> prenotch;
};

/// Layout of the manufactured-solution cube: nonlocal on [0, a], local on [c, 1].
struct UnitCubeConfig {
  double nonlocal_extent = 0.25;  // a
  double local_start = 0.125;     // c
};

struct ConvergeConfig {
  std::vector<double> levels;  // h per level, strictly decreasing
  DeltaPolicy policy = DeltaPolicy::FixedDelta;
  double ratio = 3.0;  // horizon / h under the fixed-ratio policy
};

enum class GeometryKind { UnitCube, Explicit };

struct ExperimentConfig {
  std::string experiment = "custom";
  double h = 0.0;        // mm
  double horizon = 0.0;  // mm
  MaterialParams material;
  InfluenceKind influence = InfluenceKind::Constant;
  PartialVolumeRule partial_volume = PartialVolumeRule::Linear;
  /// Sample eta_c points that lie in the overlap in the objective.
  bool sample_control_points = true;
  /// Manufactured field driving loads and data: "none", "linear-I" or "quadratic-II".
  std::string field = "none";
  std::vector<DirichletCondition> dirichlet;
  std::vector<TractionCondition> tractions;
  GeometryKind geometry_kind = GeometryKind::Explicit;
  GeometryConfig geometry;
  UnitCubeConfig unit_cube;
  ConvergeConfig converge;
  SolverConfig solver;
  OptimizerConfig optimizer;
  std::string output_dir = "pdc-output";
  /// Non-fatal findings from validation.
  std::vector<std::string> warnings;

  /// Geometry in effect for the given spacing and horizon.
  GeometryConfig resolved_geometry(double h, double horizon) const;
  /// Hard checks (throws ParameterError); soft findings go to `warnings`.
  void validate();
};

/// Defaults for patch-test, converge, bar-dirichlet, bar-neumann or custom.
ExperimentConfig canned_config(const std::string& experiment);

/// Unit-cube decomposition for manufactured-solution runs.
GeometryConfig unit_cube_geometry(double h, double horizon, const UnitCubeConfig& layout);

/// Smallest thickness of a layer box, measured along the axes where the box
/// does not span the whole domain bounding box.
double layer_thickness(const Box& layer, const BoxUnion& domain);

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<string>");

const char* to_string(PartialVolumeRule r);
const char* to_string(GeometryKind k);

}  // namespace pdc
