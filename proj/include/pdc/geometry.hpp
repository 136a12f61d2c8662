#pragma once

#include "pdc/core.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace pdc {

struct Box {
  Vec3 lo;
  Vec3 hi;

  double volume() const;
  /// Closed-box membership with an absolute tolerance.
  bool contains(const Vec3& x, double tol) const;
  /// Euclidean distance from x to the box (0 inside).
  double distance(const Vec3& x) const;
};

class BoxUnion {
 public:
  BoxUnion() = default;
  explicit BoxUnion(std::vector<Box> boxes);

  const std::vector<Box>& boxes() const { return boxes_; }
  bool empty() const { return boxes_.empty(); }
  bool contains(const Vec3& x, double tol) const;
  double distance(const Vec3& x) const;
  /// Throws ParameterError if any box is inverted or the list is empty.
  void validate() const;

 private:
  std::vector<Box> boxes_;
};

enum class Region { Interior, Dirichlet, Control };

const char* to_string(Region r);

/// Packs a lattice index into a hashable key. Coordinates must lie within +-2^20.
std::int64_t lattice_key(const LatticeIndex& ijk);

/// Material points at the cell centers of a uniform grid.
///
/// Every point carries lattice coordinates relative to `anchor`, so the
/// position of point p is anchor + (ijk + 1/2) * h.
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<double> volumes;
  std::vector<Region> tags;
  std::vector<char> overlap;
  std::vector<LatticeIndex> lattice;
  Vec3 anchor = Vec3::Zero();
  double spacing = 0.0;
  BoxUnion domain;

  Index size() const { return static_cast<Index>(positions.size()); }
  /// Point index at lattice cell ijk, or -1.
  Index find(const LatticeIndex& ijk) const;
  void rebuild_index();

 private:
  std::unordered_map<std::int64_t, Index> index_;
};

/// Boundary face of a hex cell, identified by cell and local face number
/// (0:-x 1:+x 2:-y 3:+y 4:-z 5:+z).
struct Face {
  Index cell = 0;
  int local = 0;
  std::array<Index, 4> nodes{};
};

/// Structured mesh of axis-aligned trilinear hexahedra.
struct HexMesh {
  std::vector<Vec3> nodes;
  std::vector<std::array<Index, 8>> cells;
  std::vector<LatticeIndex> node_lattice;
  std::vector<LatticeIndex> cell_lattice;
  std::map<std::string, std::vector<Index>> node_sets;
  std::map<std::string, std::vector<Face>> face_sets;
  Vec3 anchor = Vec3::Zero();
  double spacing = 0.0;
  BoxUnion domain;

  Index num_nodes() const { return static_cast<Index>(nodes.size()); }
  Index num_cells() const { return static_cast<Index>(cells.size()); }
  Index find_cell(const LatticeIndex& ijk) const;
  Index find_node(const LatticeIndex& ijk) const;
  /// Cell sharing local face `local` of `cell`, or -1 on the boundary.
  Index face_neighbor(Index cell, int local) const;
  Face make_face(Index cell, int local) const;
  void rebuild_index();

 private:
  std::unordered_map<std::int64_t, Index> cell_index_;
  std::unordered_map<std::int64_t, Index> node_index_;
};

/// Local node numbering of a hex8 cell: lattice offsets of the eight corners.
extern const std::array<LatticeIndex, 8> kHexCorners;
/// Corner numbers of each of the six faces, counter-clockwise seen from outside.
extern const std::array<std::array<int, 4>, 6> kHexFaces;

enum class PartialVolumeRule { Linear, Full };

/// Neighbor lists with per-bond quadrature volumes, in CSR layout.
struct Family {
  std::vector<Index> offsets;  // size N + 1
  std::vector<Index> neighbors;
  std::vector<double> volumes;  // V_j^(i), parallel to neighbors
  double horizon = 0.0;
  double spacing = 0.0;
  PartialVolumeRule rule = PartialVolumeRule::Linear;

  Index size() const { return static_cast<Index>(offsets.empty() ? 0 : offsets.size() - 1); }
  Index num_bonds() const { return static_cast<Index>(neighbors.size()); }
  std::span<const Index> neighbors_of(Index i) const {
    return {neighbors.data() + offsets[i], neighbors.data() + offsets[i + 1]};
  }
  std::span<const double> volumes_of(Index i) const {
    return {volumes.data() + offsets[i], volumes.data() + offsets[i + 1]};
  }
  /// Quadrature volume of bond (i, j), or 0 when j is not in F_i.
  double bond_volume(Index i, Index j) const;
  /// Radius enclosing every stored neighbor for this rule.
  double radius() const;
};

struct PrenotchPlane {
  int axis = 0;
  double value = 0.0;
  std::array<double, 2> first{};   // bounds along axis (axis + 1) % 3
  std::array<double, 2> second{};  // bounds along axis (axis + 2) % 3

  void validate() const;
  /// True when the open segment a -> b passes through the closed rectangle.
  bool cuts(const Vec3& a, const Vec3& b) const;
};

struct NodeSetSpec {
  std::string name;
  BoxUnion region;
};

/// Region boxes used to tag points and populate mesh sets.
struct Decomposition {
  BoxUnion interior;   // omega_n
  BoxUnion dirichlet;  // eta_D
  BoxUnion control;    // eta_c
  BoxUnion overlap;    // Omega_o
  std::vector<NodeSetSpec> node_sets;
  std::vector<NodeSetSpec> face_sets;  // boundary faces whose four nodes lie in the region
};

inline constexpr const char* kGammaD = "gamma_d";
inline constexpr const char* kGammaC = "gamma_c";

PointCloud generate_point_cloud(const BoxUnion& domain, double h);
HexMesh generate_hex_mesh(const BoxUnion& domain, double h);

struct TaggedDomains {
  PointCloud cloud;
  HexMesh mesh;
};

TaggedDomains classify_regions(PointCloud cloud, HexMesh mesh, const Decomposition& spec);
/// Cloud-only tagging, same rules as classify_regions.
void classify_points(PointCloud& cloud, const Decomposition& spec);
/// Mesh-only set population, same rules as classify_regions.
void classify_mesh(HexMesh& mesh, const Decomposition& spec);

Family build_families(const PointCloud& cloud, double horizon,
                      PartialVolumeRule rule = PartialVolumeRule::Linear);

/// Removes every bond whose segment crosses the prenotch, from both endpoints.
Family apply_prenotch_filter(const Family& family, const PointCloud& cloud, const PrenotchPlane& plane);

struct MeshLocation {
  Index cell = -1;
  Vec3 reference = Vec3::Zero();  // in [-1, 1]^3
};

MeshLocation locate_in_mesh(const HexMesh& mesh, const Vec3& x);
/// Trilinear map from reference coordinates of `cell` to physical space.
Vec3 map_to_physical(const HexMesh& mesh, Index cell, const Vec3& reference);
/// Trilinear shape function values at reference coordinates, in kHexCorners order.
std::array<double, 8> hex_shape_values(const Vec3& reference);

}  // namespace pdc
