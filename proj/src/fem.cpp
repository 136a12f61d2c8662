#include "pdc/fem.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace pdc {

namespace {

const double kGauss = 1.0 / std::sqrt(3.0);

double corner_sign(int corner, int axis) { return kHexCorners[corner][axis] == 0 ? -1.0 : 1.0; }

// dN_a / d(ref_k), 8 x 3.
Eigen::Matrix<double, 8, 3> shape_gradients(const Vec3& r) {
  Eigen::Matrix<double, 8, 3> g;
  for (int a = 0; a < 8; ++a) {
    const Vec3 s(corner_sign(a, 0), corner_sign(a, 1), corner_sign(a, 2));
    const Vec3 f(1.0 + s[0] * r[0], 1.0 + s[1] * r[1], 1.0 + s[2] * r[2]);
    g(a, 0) = 0.125 * s[0] * f[1] * f[2];
    g(a, 1) = 0.125 * s[1] * f[0] * f[2];
    g(a, 2) = 0.125 * s[2] * f[0] * f[1];
  }
  return g;
}

std::array<Vec3, 8> cell_nodes(const HexMesh& mesh, Index c) {
  std::array<Vec3, 8> x;
  for (int a = 0; a < 8; ++a) x[a] = mesh.nodes[mesh.cells[c][a]];
  return x;
}

Mat3 jacobian(const std::array<Vec3, 8>& x, const Eigen::Matrix<double, 8, 3>& dn) {
  Mat3 j = Mat3::Zero();
  for (int a = 0; a < 8; ++a) j += x[a] * dn.row(a);
  return j;
}

}  // namespace

Eigen::Matrix<double, 24, 24> hex8_stiffness(const std::array<Vec3, 8>& nodes, const MaterialParams& params,
                                              Index cell) {
  const double lam = params.lambda(), mu = params.mu();
  Eigen::Matrix<double, 6, 6> d = Eigen::Matrix<double, 6, 6>::Zero();
  d.topLeftCorner<3, 3>().setConstant(lam);
  d.topLeftCorner<3, 3>().diagonal().array() += 2.0 * mu;
  d.bottomRightCorner<3, 3>().diagonal().setConstant(mu);

  Eigen::Matrix<double, 24, 24> ke = Eigen::Matrix<double, 24, 24>::Zero();
  for (int q = 0; q < 8; ++q) {
    const Vec3 r(kGauss * corner_sign(q, 0), kGauss * corner_sign(q, 1), kGauss * corner_sign(q, 2));
    const auto dn = shape_gradients(r);
    const Mat3 j = jacobian(nodes, dn);
    const double det = j.determinant();
    if (!(det > 0.0)) {
      std::ostringstream os;
      os << "cell " << cell << " has a non-positive Jacobian (" << det << ")";
      throw AssemblyError(cell, os.str());
    }
    const Eigen::Matrix<double, 8, 3> dx = dn * j.inverse();
    Eigen::Matrix<double, 6, 24> b = Eigen::Matrix<double, 6, 24>::Zero();
    for (int a = 0; a < 8; ++a) {
      b(0, 3 * a) = dx(a, 0);
      b(1, 3 * a + 1) = dx(a, 1);
      b(2, 3 * a + 2) = dx(a, 2);
      b(3, 3 * a + 1) = dx(a, 2);
      b(3, 3 * a + 2) = dx(a, 1);
      b(4, 3 * a) = dx(a, 2);
      b(4, 3 * a + 2) = dx(a, 0);
      b(5, 3 * a) = dx(a, 1);
      b(5, 3 * a + 1) = dx(a, 0);
    }
    ke.noalias() += b.transpose() * d * b * det;
  }
  return ke;
}

BlockSparseMatrix assemble_stiffness(const HexMesh& mesh, const MaterialParams& params) {
  params.validate();
  BlockSparseBuilder builder(mesh.num_nodes(), mesh.num_nodes());
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto ke = hex8_stiffness(cell_nodes(mesh, c), params, c);
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) builder.add(mesh.cells[c][a], mesh.cells[c][b], ke.block<3, 3>(3 * a, 3 * b));
  }
  BlockSparseMatrix k = builder.build();
  k.mark_symmetric(1e-12);
  return k;
}

VectorXd assemble_body_load(const HexMesh& mesh, const VectorField& b) {
  VectorXd f = VectorXd::Zero(3 * mesh.num_nodes());
  if (!b) return f;
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto x = cell_nodes(mesh, c);
    for (int q = 0; q < 8; ++q) {
      const Vec3 r(kGauss * corner_sign(q, 0), kGauss * corner_sign(q, 1), kGauss * corner_sign(q, 2));
      const double det = jacobian(x, shape_gradients(r)).determinant();
      const auto n = hex_shape_values(r);
      Vec3 xq = Vec3::Zero();
      for (int a = 0; a < 8; ++a) xq += n[a] * x[a];
      const Vec3 bq = b(xq) * det;
      for (int a = 0; a < 8; ++a) f.segment<3>(3 * mesh.cells[c][a]) += n[a] * bq;
    }
  }
  return f;
}

VectorXd assemble_traction_load(const HexMesh& mesh, const std::vector<Face>& faces, const Vec3& traction) {
  VectorXd f = VectorXd::Zero(3 * mesh.num_nodes());
  for (const Face& face : faces) {
    if (mesh.face_neighbor(face.cell, face.local) >= 0) {
      std::ostringstream os;
      os << "face " << face.local << " of cell " << face.cell << " is interior";
      throw TopologyError(os.str());
    }
    const auto x = cell_nodes(mesh, face.cell);
    const int axis = face.local / 2;
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
    for (int qs = 0; qs < 2; ++qs) {
      for (int qt = 0; qt < 2; ++qt) {
        Vec3 r;
        r[axis] = face.local % 2 == 0 ? -1.0 : 1.0;
        r[u] = qs == 0 ? -kGauss : kGauss;
        r[v] = qt == 0 ? -kGauss : kGauss;
        const auto dn = shape_gradients(r);
        const Mat3 j = jacobian(x, dn);
        const double area = j.col(u).cross(j.col(v)).norm();
        const auto n = hex_shape_values(r);
        for (int a = 0; a < 8; ++a) f.segment<3>(3 * mesh.cells[face.cell][a]) += n[a] * area * traction;
      }
    }
  }
  return f;
}

VectorXd assemble_traction_load(const HexMesh& mesh, const std::string& face_set, const Vec3& traction) {
  auto it = mesh.face_sets.find(face_set);
  if (it == mesh.face_sets.end()) throw ValidationError("unknown face set '" + face_set + "'");
  return assemble_traction_load(mesh, it->second, traction);
}

VectorXd dirichlet_values(const HexMesh& mesh, const LoadSpec& spec) {
  VectorXd g = VectorXd::Constant(3 * mesh.num_nodes(), std::numeric_limits<double>::quiet_NaN());
  for (const DirichletSpec& d : spec.dirichlet) {
    auto it = mesh.node_sets.find(d.node_set);
    if (it == mesh.node_sets.end()) throw ValidationError("unknown node set '" + d.node_set + "'");
    if (!d.value) throw ValidationError("node set '" + d.node_set + "' has no Dirichlet value");
    for (Index n : it->second) {
      const Vec3 v = d.value(mesh.nodes[n]);
      for (int c = 0; c < 3; ++c) {
        if (!d.components[c]) continue;
        double& slot = g[3 * n + c];
        if (!std::isnan(slot)) {
          const double scale = std::max({1.0, std::abs(slot), std::abs(v[c])});
          if (std::abs(slot - v[c]) > 1e-12 * scale) {
            std::ostringstream os;
            os << "node " << n << " at " << format_point(mesh.nodes[n]) << " has conflicting Dirichlet values "
               << slot << " and " << v[c] << " on component " << c;
            throw ValidationError(os.str());
          }
        }
        slot = v[c];
      }
    }
  }
  return g;
}

void LoadSpec::validate(const HexMesh& mesh) const {
  for (const TractionSpec& t : tractions) {
    if (!mesh.face_sets.count(t.face_set)) throw ValidationError("unknown face set '" + t.face_set + "'");
  }
  dirichlet_values(mesh, *this);
}

VectorXd ReducedSystem::reconstruct(const VectorXd& free_values) const {
  VectorXd u = lift;
  partition->scatter(free_values, DofKind::Free, u);
  return u;
}

ReducedSystem apply_dirichlet(std::shared_ptr<const BlockSparseMatrix> stiffness, const VectorXd& load,
                              const HexMesh& mesh, const LoadSpec& spec) {
  spec.validate(mesh);
  const VectorXd g = dirichlet_values(mesh, spec);
  std::vector<DofKind> kinds(g.size(), DofKind::Free);
  VectorXd lift = VectorXd::Zero(g.size());
  for (Index d = 0; d < g.size(); ++d) {
    if (!std::isnan(g[d])) {
      kinds[d] = DofKind::Fixed;
      lift[d] = g[d];
    }
  }
  ReducedSystem sys;
  auto part = std::make_shared<DofPartition>(std::move(kinds));
  sys.partition = part;
  sys.full = stiffness;
  sys.free_block = std::make_shared<SubOperator>(stiffness, part, DofKind::Free, DofKind::Free);
  sys.lift = lift;
  VectorXd klift;
  stiffness->apply(lift, klift);
  sys.rhs = part->gather(load - klift, DofKind::Free);
  return sys;
}

Vec3 reaction_force(const LinearOperator& stiffness, const VectorXd& u, const VectorXd& load,
                    const std::vector<Index>& nodes) {
  VectorXd ku;
  stiffness.apply(u, ku);
  Vec3 r = Vec3::Zero();
  for (Index n : nodes) r += ku.segment<3>(3 * n) - load.segment<3>(3 * n);
  return r;
}

}  // namespace pdc
