#pragma once

#include "pdc/config.hpp"
#include "pdc/experiment.hpp"
#include "pdc/geometry.hpp"
#include "pdc/verification.hpp"

#include <json.hpp>
#include <string>

namespace pdc {

/// Legacy VTK ASCII: one vertex cell per point with displacement and force density vectors.
void write_cloud_vtk(const std::string& path, const PointCloud& cloud, const VectorXd& displacement,
                     const VectorXd& force_density);
/// Legacy VTK ASCII: hexahedral cells with nodal displacement vectors.
void write_mesh_vtk(const std::string& path, const HexMesh& mesh, const VectorXd& displacement);

/// Columns h, error_n, error_l, rate_n, rate_l; rate cells are empty on the first row.
void write_convergence_csv(const std::string& path, const ConvergenceReport& report, bool rms);
/// Optimizer history: iteration, objective, gradient_norm, step.
void write_history_csv(const std::string& path, const std::vector<IterationRecord>& history);

nlohmann::json config_to_json(const ExperimentConfig& cfg);
nlohmann::json report_to_json(const ConvergenceReport& report);
void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace pdc
