#pragma once

#include "pdc/geometry.hpp"
#include "pdc/lps.hpp"
#include "pdc/sparse.hpp"

#include <functional>
#include <memory>

namespace pdc {

using VectorField = std::function<Vec3(const Vec3&)>;

struct TractionSpec {
  std::string face_set;
  Vec3 traction = Vec3::Zero();  // MPa
};

struct DirichletSpec {
  std::string node_set;
  std::array<bool, 3> components{true, true, true};
  VectorField value;  // mm
};

struct LoadSpec {
  VectorField body;  // N/mm^3; empty means zero
  std::vector<TractionSpec> tractions;
  std::vector<DirichletSpec> dirichlet;

  /// Checks set references and rejects conflicting Dirichlet values.
  void validate(const HexMesh& mesh) const;
};

/// 24x24 hex8 stiffness with 2x2x2 Gauss quadrature; node order kHexCorners.
Eigen::Matrix<double, 24, 24> hex8_stiffness(const std::array<Vec3, 8>& nodes, const MaterialParams& params,
                                              Index cell = 0);

BlockSparseMatrix assemble_stiffness(const HexMesh& mesh, const MaterialParams& params);
VectorXd assemble_body_load(const HexMesh& mesh, const VectorField& b);
VectorXd assemble_traction_load(const HexMesh& mesh, const std::string& face_set, const Vec3& traction);
VectorXd assemble_traction_load(const HexMesh& mesh, const std::vector<Face>& faces, const Vec3& traction);

/// Dirichlet dofs eliminated from a nodal system.
struct ReducedSystem {
  std::shared_ptr<const DofPartition> partition;
  std::shared_ptr<const LinearOperator> full;
  std::shared_ptr<const LinearOperator> free_block;  // A_II
  VectorXd rhs;   // f_I - A_ID g
  VectorXd lift;  // g on fixed dofs, zero elsewhere

  /// Full-length vector from free-dof values.
  VectorXd reconstruct(const VectorXd& free_values) const;
};

/// Prescribed displacements per dof; NaN marks unconstrained dofs.
VectorXd dirichlet_values(const HexMesh& mesh, const LoadSpec& spec);

/// Eliminates constrained dofs. Control dofs (if any) are left in the free group.
ReducedSystem apply_dirichlet(std::shared_ptr<const BlockSparseMatrix> stiffness, const VectorXd& load,
                              const HexMesh& mesh, const LoadSpec& spec);

/// Reaction force sum over a node set: sum over its dofs of (K u - f).
Vec3 reaction_force(const LinearOperator& stiffness, const VectorXd& u, const VectorXd& load,
                    const std::vector<Index>& nodes);

}  // namespace pdc
