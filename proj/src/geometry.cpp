#include "pdc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace pdc {

namespace {

const char* kAxisName[3] = {"x", "y", "z"};

// Relative tolerance for "h divides the edge length".
constexpr double kAlignTol = 1e-9;
// Membership tolerance, in units of h.
constexpr double kMemberTol = 1e-9;

int checked_steps(double length, double h, std::size_t box, int axis, const char* what) {
  const double steps = length / h;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > kAlignTol * std::max(1.0, std::abs(steps))) {
    std::ostringstream os;
    os << "box #" << box << ": " << what << " along " << kAxisName[axis] << " (" << length
       << ") is not a multiple of h = " << h;
    throw AlignmentError(box, axis, os.str());
  }
  return static_cast<int>(rounded);
}

struct BoxGrid {
  LatticeIndex origin;
  LatticeIndex cells;
};

std::vector<BoxGrid> aligned_grids(const BoxUnion& domain, double h, const Vec3& anchor) {
  domain.validate();
  if (!(h > 0.0)) throw ParameterError("grid spacing h must be positive");
  std::vector<BoxGrid> grids;
  for (std::size_t b = 0; b < domain.boxes().size(); ++b) {
    const Box& box = domain.boxes()[b];
    BoxGrid g{};
    for (int a = 0; a < 3; ++a) {
      g.cells[a] = checked_steps(box.hi[a] - box.lo[a], h, b, a, "edge length");
      g.origin[a] = checked_steps(box.lo[a] - anchor[a], h, b, a, "offset from the first box");
    }
    grids.push_back(g);
  }
  return grids;
}

LatticeIndex add(const LatticeIndex& a, const LatticeIndex& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

}  // namespace

std::string format_point(const Vec3& x) {
  std::ostringstream os;
  os.precision(10);
  os << "(" << x[0] << ", " << x[1] << ", " << x[2] << ")";
  return os.str();
}

const std::array<LatticeIndex, 8> kHexCorners = {{{0, 0, 0},
                                                  {1, 0, 0},
                                                  {1, 1, 0},
                                                  {0, 1, 0},
                                                  {0, 0, 1},
                                                  {1, 0, 1},
                                                  {1, 1, 1},
                                                  {0, 1, 1}}};

const std::array<std::array<int, 4>, 6> kHexFaces = {{{0, 4, 7, 3},
                                                      {1, 2, 6, 5},
                                                      {0, 1, 5, 4},
                                                      {3, 7, 6, 2},
                                                      {0, 3, 2, 1},
                                                      {4, 5, 6, 7}}};

double Box::volume() const { return (hi - lo).prod(); }

bool Box::contains(const Vec3& x, double tol) const {
  for (int a = 0; a < 3; ++a) {
    if (x[a] < lo[a] - tol || x[a] > hi[a] + tol) return false;
  }
  return true;
}

double Box::distance(const Vec3& x) const {
  Vec3 d;
  for (int a = 0; a < 3; ++a) d[a] = std::max({lo[a] - x[a], 0.0, x[a] - hi[a]});
  return d.norm();
}

BoxUnion::BoxUnion(std::vector<Box> boxes) : boxes_(std::move(boxes)) {}

bool BoxUnion::contains(const Vec3& x, double tol) const {
  return std::any_of(boxes_.begin(), boxes_.end(), [&](const Box& b) { return b.contains(x, tol); });
}

double BoxUnion::distance(const Vec3& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (const Box& b : boxes_) d = std::min(d, b.distance(x));
  return d;
}

void BoxUnion::validate() const {
  if (boxes_.empty()) throw ParameterError("box union is empty");
  for (std::size_t b = 0; b < boxes_.size(); ++b) {
    for (int a = 0; a < 3; ++a) {
      if (!(boxes_[b].lo[a] < boxes_[b].hi[a])) {
        std::ostringstream os;
        os << "box #" << b << " is degenerate along " << kAxisName[a];
        throw ParameterError(os.str());
      }
    }
  }
}

const char* to_string(Region r) {
  switch (r) {
    case Region::Interior: return "interior";
    case Region::Dirichlet: return "dirichlet";
    case Region::Control: return "control";
  }
  return "?";
}

std::int64_t lattice_key(const LatticeIndex& ijk) {
  constexpr std::int64_t bias = 1 << 20;
  return ((ijk[0] + bias) << 42) | ((ijk[1] + bias) << 21) | (ijk[2] + bias);
}

Index PointCloud::find(const LatticeIndex& ijk) const {
  auto it = index_.find(lattice_key(ijk));
  return it == index_.end() ? -1 : it->second;
}

void PointCloud::rebuild_index() {
  index_.clear();
  index_.reserve(lattice.size());
  for (std::size_t p = 0; p < lattice.size(); ++p) index_[lattice_key(lattice[p])] = static_cast<Index>(p);
}

Index HexMesh::find_cell(const LatticeIndex& ijk) const {
  auto it = cell_index_.find(lattice_key(ijk));
  return it == cell_index_.end() ? -1 : it->second;
}

Index HexMesh::find_node(const LatticeIndex& ijk) const {
  auto it = node_index_.find(lattice_key(ijk));
  return it == node_index_.end() ? -1 : it->second;
}

Index HexMesh::face_neighbor(Index cell, int local) const {
  LatticeIndex ijk = cell_lattice[cell];
  ijk[local / 2] += (local % 2 == 0) ? -1 : 1;
  return find_cell(ijk);
}

Face HexMesh::make_face(Index cell, int local) const {
  Face f;
  f.cell = cell;
  f.local = local;
  for (int k = 0; k < 4; ++k) f.nodes[k] = cells[cell][kHexFaces[local][k]];
  return f;
}

void HexMesh::rebuild_index() {
  cell_index_.clear();
  node_index_.clear();
  for (std::size_t c = 0; c < cell_lattice.size(); ++c) cell_index_[lattice_key(cell_lattice[c])] = static_cast<Index>(c);
  for (std::size_t n = 0; n < node_lattice.size(); ++n) node_index_[lattice_key(node_lattice[n])] = static_cast<Index>(n);
}

PointCloud generate_point_cloud(const BoxUnion& domain, double h) {
  const Vec3 anchor = domain.empty() ? Vec3::Zero() : domain.boxes().front().lo;
  const auto grids = aligned_grids(domain, h, anchor);

  PointCloud cloud;
  cloud.anchor = anchor;
  cloud.spacing = h;
  cloud.domain = domain;
  std::unordered_set<std::int64_t> seen;
  const double volume = h * h * h;
  for (const BoxGrid& g : grids) {
    for (int k = 0; k < g.cells[2]; ++k) {
      for (int j = 0; j < g.cells[1]; ++j) {
        for (int i = 0; i < g.cells[0]; ++i) {
          const LatticeIndex ijk = add(g.origin, {i, j, k});
          if (!seen.insert(lattice_key(ijk)).second) continue;
          cloud.lattice.push_back(ijk);
          cloud.positions.push_back(anchor + h * Vec3(ijk[0] + 0.5, ijk[1] + 0.5, ijk[2] + 0.5));
          cloud.volumes.push_back(volume);
        }
      }
    }
  }
  cloud.tags.assign(cloud.positions.size(), Region::Interior);
  cloud.overlap.assign(cloud.positions.size(), 0);
  cloud.rebuild_index();
  return cloud;
}

HexMesh generate_hex_mesh(const BoxUnion& domain, double h) {
  const Vec3 anchor = domain.empty() ? Vec3::Zero() : domain.boxes().front().lo;
  const auto grids = aligned_grids(domain, h, anchor);

  HexMesh mesh;
  mesh.anchor = anchor;
  mesh.spacing = h;
  mesh.domain = domain;
  std::unordered_map<std::int64_t, Index> nodes;
  std::unordered_set<std::int64_t> cells;
  auto node_id = [&](const LatticeIndex& ijk) {
    auto [it, inserted] = nodes.try_emplace(lattice_key(ijk), static_cast<Index>(mesh.nodes.size()));
    if (inserted) {
      mesh.node_lattice.push_back(ijk);
      mesh.nodes.push_back(anchor + h * Vec3(ijk[0], ijk[1], ijk[2]));
    }
    return it->second;
  };
  for (const BoxGrid& g : grids) {
    for (int k = 0; k <= g.cells[2]; ++k)
      for (int j = 0; j <= g.cells[1]; ++j)
        for (int i = 0; i <= g.cells[0]; ++i) node_id(add(g.origin, {i, j, k}));
    for (int k = 0; k < g.cells[2]; ++k) {
      for (int j = 0; j < g.cells[1]; ++j) {
        for (int i = 0; i < g.cells[0]; ++i) {
          const LatticeIndex ijk = add(g.origin, {i, j, k});
          if (!cells.insert(lattice_key(ijk)).second) continue;
          std::array<Index, 8> conn{};
          for (int c = 0; c < 8; ++c) conn[c] = node_id(add(ijk, kHexCorners[c]));
          mesh.cells.push_back(conn);
          mesh.cell_lattice.push_back(ijk);
        }
      }
    }
  }
  mesh.rebuild_index();
  return mesh;
}

void classify_points(PointCloud& cloud, const Decomposition& spec) {
  const double tol = kMemberTol * cloud.spacing;
  for (Index p = 0; p < cloud.size(); ++p) {
    const Vec3& x = cloud.positions[p];
    if (spec.dirichlet.contains(x, tol)) {
      cloud.tags[p] = Region::Dirichlet;
    } else if (spec.control.contains(x, tol)) {
      cloud.tags[p] = Region::Control;
    } else if (spec.interior.contains(x, tol)) {
      cloud.tags[p] = Region::Interior;
    } else {
      throw ClassificationError(x, "material point " + format_point(x) + " lies in no region");
    }
    cloud.overlap[p] = spec.overlap.contains(x, tol) ? 1 : 0;
  }
}

void classify_mesh(HexMesh& mesh, const Decomposition& spec) {
  const double tol = kMemberTol * mesh.spacing;
  for (const NodeSetSpec& set : spec.node_sets) {
    std::vector<Index>& ids = mesh.node_sets[set.name];
    ids.clear();
    for (Index n = 0; n < mesh.num_nodes(); ++n) {
      if (set.region.contains(mesh.nodes[n], tol)) ids.push_back(n);
    }
  }
  // Physical boundary data wins over the virtual control boundary on seams.
  auto gc = mesh.node_sets.find(kGammaC);
  if (gc != mesh.node_sets.end()) {
    std::unordered_set<Index> dirichlet;
    for (const auto& [name, ids] : mesh.node_sets) {
      if (name.rfind(kGammaD, 0) == 0) dirichlet.insert(ids.begin(), ids.end());
    }
    std::erase_if(gc->second, [&](Index n) { return dirichlet.count(n) > 0; });
  }
  for (const NodeSetSpec& set : spec.face_sets) {
    std::vector<Face>& faces = mesh.face_sets[set.name];
    faces.clear();
    for (Index c = 0; c < mesh.num_cells(); ++c) {
      for (int f = 0; f < 6; ++f) {
        if (mesh.face_neighbor(c, f) >= 0) continue;
        Face face = mesh.make_face(c, f);
        const bool inside = std::all_of(face.nodes.begin(), face.nodes.end(),
                                        [&](Index n) { return set.region.contains(mesh.nodes[n], tol); });
        if (inside) faces.push_back(face);
      }
    }
  }
}

TaggedDomains classify_regions(PointCloud cloud, HexMesh mesh, const Decomposition& spec) {
  classify_points(cloud, spec);
  classify_mesh(mesh, spec);
  return {std::move(cloud), std::move(mesh)};
}

double Family::radius() const {
  return rule == PartialVolumeRule::Linear ? horizon + 0.5 * spacing : horizon;
}

double Family::bond_volume(Index i, Index j) const {
  auto nb = neighbors_of(i);
  auto it = std::lower_bound(nb.begin(), nb.end(), j);
  if (it == nb.end() || *it != j) return 0.0;
  return volumes[offsets[i] + (it - nb.begin())];
}

Family build_families(const PointCloud& cloud, double horizon, PartialVolumeRule rule) {
  if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
  const double h = cloud.spacing;
  if (!(h > 0.0)) throw ParameterError("point cloud has no grid spacing");

  Family fam;
  fam.horizon = horizon;
  fam.spacing = h;
  fam.rule = rule;
  const double radius = fam.radius();

  struct Offset {
    LatticeIndex d;
    double fraction;
  };
  std::vector<Offset> stencil;
  const int reach = static_cast<int>(std::ceil(radius / h));
  for (int k = -reach; k <= reach; ++k) {
    for (int j = -reach; j <= reach; ++j) {
      for (int i = -reach; i <= reach; ++i) {
        if (i == 0 && j == 0 && k == 0) continue;
        const double r = h * std::sqrt(double(i * i + j * j + k * k));
        double fraction = 0.0;
        if (rule == PartialVolumeRule::Linear) {
          fraction = std::clamp((horizon + 0.5 * h - r) / h, 0.0, 1.0);
        } else {
          fraction = r <= horizon * (1.0 + 1e-12) ? 1.0 : 0.0;
        }
        // Bonds touching the support boundary carry no weight.
        if (fraction > 1e-12) stencil.push_back({{i, j, k}, fraction});
      }
    }
  }

  const Index n = cloud.size();
  fam.offsets.assign(n + 1, 0);
  std::vector<std::pair<Index, double>> row;
  for (Index p = 0; p < n; ++p) {
    row.clear();
    for (const Offset& o : stencil) {
      const Index q = cloud.find(add(cloud.lattice[p], o.d));
      if (q >= 0) row.emplace_back(q, cloud.volumes[q] * o.fraction);
    }
    std::sort(row.begin(), row.end());
    for (const auto& [q, v] : row) {
      fam.neighbors.push_back(q);
      fam.volumes.push_back(v);
    }
    fam.offsets[p + 1] = static_cast<Index>(fam.neighbors.size());
  }
  return fam;
}

void PrenotchPlane::validate() const {
  if (axis < 0 || axis > 2) throw ParameterError("prenotch axis must be 0, 1 or 2");
  if (!(first[0] < first[1]) || !(second[0] < second[1])) {
    throw ParameterError("prenotch rectangle bounds are degenerate");
  }
}

bool PrenotchPlane::cuts(const Vec3& a, const Vec3& b) const {
  const double sa = a[axis] - value;
  const double sb = b[axis] - value;
  if (!(sa * sb < 0.0)) return false;
  const double t = sa / (sa - sb);
  const Vec3 p = a + t * (b - a);
  const int u = (axis + 1) % 3;
  const int v = (axis + 2) % 3;
  const double tol = 1e-12 * std::max(1.0, (b - a).norm());
  return p[u] >= first[0] - tol && p[u] <= first[1] + tol && p[v] >= second[0] - tol &&
         p[v] <= second[1] + tol;
}

Family apply_prenotch_filter(const Family& family, const PointCloud& cloud, const PrenotchPlane& plane) {
  plane.validate();
  Family out;
  out.horizon = family.horizon;
  out.spacing = family.spacing;
  out.rule = family.rule;
  out.offsets.assign(family.offsets.size(), 0);
  for (Index i = 0; i < family.size(); ++i) {
    auto nb = family.neighbors_of(i);
    auto vol = family.volumes_of(i);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      if (plane.cuts(cloud.positions[i], cloud.positions[nb[k]])) continue;
      out.neighbors.push_back(nb[k]);
      out.volumes.push_back(vol[k]);
    }
    out.offsets[i + 1] = static_cast<Index>(out.neighbors.size());
  }
  return out;
}

std::array<double, 8> hex_shape_values(const Vec3& r) {
  std::array<double, 8> n{};
  for (int c = 0; c < 8; ++c) {
    double v = 0.125;
    for (int a = 0; a < 3; ++a) v *= 1.0 + r[a] * (kHexCorners[c][a] == 0 ? -1.0 : 1.0);
    n[c] = v;
  }
  return n;
}

Vec3 map_to_physical(const HexMesh& mesh, Index cell, const Vec3& reference) {
  const auto n = hex_shape_values(reference);
  Vec3 x = Vec3::Zero();
  for (int c = 0; c < 8; ++c) x += n[c] * mesh.nodes[mesh.cells[cell][c]];
  return x;
}

MeshLocation locate_in_mesh(const HexMesh& mesh, const Vec3& x) {
  const double h = mesh.spacing;
  const double tol = kMemberTol;  // in units of h
  const Vec3 g = (x - mesh.anchor) / h;
  std::array<std::array<int, 2>, 3> candidates{};
  std::array<int, 3> count{};
  for (int a = 0; a < 3; ++a) {
    const int base = static_cast<int>(std::floor(g[a]));
    candidates[a][0] = base;
    count[a] = 1;
    const double frac = g[a] - base;
    if (frac < tol) candidates[a][count[a]++] = base - 1;
    else if (frac > 1.0 - tol) candidates[a][count[a]++] = base + 1;
  }
  for (int i = 0; i < count[0]; ++i) {
    for (int j = 0; j < count[1]; ++j) {
      for (int k = 0; k < count[2]; ++k) {
        const LatticeIndex ijk{candidates[0][i], candidates[1][j], candidates[2][k]};
        const Index cell = mesh.find_cell(ijk);
        if (cell < 0) continue;
        Vec3 ref;
        for (int a = 0; a < 3; ++a) ref[a] = std::clamp(2.0 * (g[a] - ijk[a]) - 1.0, -1.0, 1.0);
        return {cell, ref};
      }
    }
  }
  throw LocationError(x, "point " + format_point(x) + " lies outside the mesh");
}

}  // namespace pdc
