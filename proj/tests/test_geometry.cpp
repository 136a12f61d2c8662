#include "helpers.hpp"
#include "pdc/config.hpp"

#include <doctest.h>

#include <set>

using namespace pdc;
using pdc::test::box;
using pdc::test::cube;

TEST_CASE("point cloud counts and volumes") {
  const PointCloud c8 = generate_point_cloud(cube(0, 1), 0.5);
  CHECK(c8.size() == 8);
  for (double v : c8.volumes) CHECK(v == doctest::Approx(0.125).epsilon(1e-15));

  const PointCloud c64 = generate_point_cloud(cube(0, 1), 0.25);
  CHECK(c64.size() == 64);
  double total = 0.0;
  for (double v : c64.volumes) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("abutting boxes produce distinct points") {
  const BoxUnion two({Box{Vec3(0, 0, 0), Vec3(1, 1, 1)}, Box{Vec3(1, 0, 0), Vec3(2, 1, 1)}});
  const PointCloud c = generate_point_cloud(two, 0.5);
  CHECK(c.size() == 16);
  std::set<std::tuple<long, long, long>> seen;
  for (const Vec3& x : c.positions) seen.insert({std::lround(4 * x[0]), std::lround(4 * x[1]), std::lround(4 * x[2])});
  CHECK(seen.size() == 16);

  // Overlapping boxes must not duplicate shared cells either.
  const BoxUnion overlapping({Box{Vec3(0, 0, 0), Vec3(1.5, 1, 1)}, Box{Vec3(1, 0, 0), Vec3(2, 1, 1)}});
  CHECK(generate_point_cloud(overlapping, 0.5).size() == 16);
}

TEST_CASE("misaligned box is rejected") {
  CHECK_THROWS_AS(generate_point_cloud(box(0, 1, 0, 1, 0, 0.3), 0.25), AlignmentError);
  try {
    generate_point_cloud(box(0, 1, 0, 1, 0, 0.3), 0.25);
  } catch (const AlignmentError& e) {
    CHECK(e.axis() == 2);
    CHECK(e.box() == 0);
  }
}

TEST_CASE("hex mesh counts") {
  const HexMesh m1 = generate_hex_mesh(cube(0, 1), 1.0);
  CHECK(m1.num_cells() == 1);
  CHECK(m1.num_nodes() == 8);
  const HexMesh m8 = generate_hex_mesh(cube(0, 1), 0.5);
  CHECK(m8.num_cells() == 8);
  CHECK(m8.num_nodes() == 27);
  const BoxUnion two({Box{Vec3(0, 0, 0), Vec3(1, 1, 1)}, Box{Vec3(1, 0, 0), Vec3(2, 1, 1)}});
  const HexMesh m = generate_hex_mesh(two, 0.5);
  CHECK(m.num_cells() == 16);
  CHECK(m.num_nodes() == 5 * 3 * 3);
}

TEST_CASE("hex cells have positive volume and consistent faces") {
  const HexMesh m = generate_hex_mesh(box(0, 2, 0, 1, 0, 1), 0.5);
  Index boundary = 0;
  for (Index c = 0; c < m.num_cells(); ++c) {
    const Vec3& x0 = m.nodes[m.cells[c][0]];
    const Vec3& x6 = m.nodes[m.cells[c][6]];
    CHECK((x6 - x0).prod() == doctest::Approx(0.125));
    for (int f = 0; f < 6; ++f) {
      const Index nb = m.face_neighbor(c, f);
      if (nb < 0) {
        ++boundary;
        continue;
      }
      CHECK(m.face_neighbor(nb, f ^ 1) == c);
    }
  }
  // Surface of a 4x2x2 block of cells.
  CHECK(boundary == 2 * (4 * 2 + 4 * 2 + 2 * 2));
}

TEST_CASE("prenotched bar regions") {
  const ExperimentConfig cfg = canned_config("bar-dirichlet");
  const GeometryConfig g = cfg.resolved_geometry(cfg.h, cfg.horizon);
  PointCloud cloud = generate_point_cloud(g.nonlocal_domain, cfg.h);
  HexMesh mesh = generate_hex_mesh(g.local_domain, cfg.h);
  const TaggedDomains t = classify_regions(std::move(cloud), std::move(mesh), g.regions);

  // Probe regions by box membership on the same rules.
  auto tag_of = [&](const Vec3& x) {
    PointCloud probe;
    probe.positions = {x};
    probe.volumes = {1.0};
    probe.tags = {Region::Interior};
    probe.overlap = {0};
    probe.spacing = cfg.h;
    classify_points(probe, g.regions);
    return probe.tags[0];
  };
  CHECK(tag_of(Vec3(0, 0, 0)) == Region::Interior);
  CHECK(tag_of(Vec3(4.2, 0, 0)) == Region::Control);

  Index node = -1;
  for (Index n = 0; n < t.mesh.num_nodes(); ++n)
    if ((t.mesh.nodes[n] - Vec3(18, -4, -2)).norm() < 1e-12) node = n;
  REQUIRE(node >= 0);
  const auto& right = t.mesh.node_sets.at("gamma_d_right");
  CHECK(std::find(right.begin(), right.end(), node) != right.end());

  Index interior = 0, control = 0;
  for (Region r : t.cloud.tags) (r == Region::Interior ? interior : control)++;
  CHECK(interior > 0);
  CHECK(control > 0);

  const ExperimentConfig nb = canned_config("bar-neumann");
  const GeometryConfig gn = nb.resolved_geometry(nb.h, nb.horizon);
  PointCloud probe;
  probe.positions = {Vec3(-15.0, 0, 0)};
  probe.volumes = {1.0};
  probe.tags = {Region::Interior};
  probe.overlap = {0};
  probe.spacing = nb.h;
  classify_points(probe, gn.regions);
  CHECK(probe.tags[0] == Region::Control);
}

TEST_CASE("seam points take the control tag") {
  Decomposition d;
  d.interior = box(0, 1, 0, 1, 0, 1);
  d.control = box(1, 2, 0, 1, 0, 1);
  PointCloud c = generate_point_cloud(box(0.5, 1.5, 0, 1, 0, 1), 1.0);
  REQUIRE(c.size() == 1);
  CHECK(c.positions[0].isApprox(Vec3(1.0, 0.5, 0.5)));
  classify_points(c, d);
  CHECK(c.tags[0] == Region::Control);
}

TEST_CASE("unclassified point raises with its coordinates") {
  Decomposition d;
  d.interior = box(0, 1, 0, 1, 0, 1);
  PointCloud c = generate_point_cloud(box(0, 2, 0, 1, 0, 1), 1.0);
  try {
    classify_points(c, d);
    FAIL("expected ClassificationError");
  } catch (const ClassificationError& e) {
    CHECK(e.point().isApprox(Vec3(1.5, 0.5, 0.5)));
  }
}

namespace {

// Brute-force lattice enumeration of the linear partial-volume rule.
struct FamilyOracle {
  int count = 0;
  double m = 0.0;
};

FamilyOracle enumerate_offsets(double h, double delta, double rmax) {
  FamilyOracle o;
  const int reach = static_cast<int>(std::ceil((delta + h) / h));
  for (int i = -reach; i <= reach; ++i)
    for (int j = -reach; j <= reach; ++j)
      for (int k = -reach; k <= reach; ++k) {
        if (i == 0 && j == 0 && k == 0) continue;
        const double r = h * std::sqrt(double(i * i + j * j + k * k));
        if (r > rmax + 1e-12) continue;
        const double w = std::clamp((delta + h / 2 - r) / h, 0.0, 1.0);
        if (w <= 0.0) continue;
        ++o.count;
        o.m += r * r * w * h * h * h;
      }
  return o;
}

}  // namespace

TEST_CASE("family of an interior point, h=1 delta=1.5") {
  const PointCloud c = generate_point_cloud(cube(0, 7), 1.0);
  const Family f = build_families(c, 1.5);
  const Index center = c.find({3, 3, 3});
  REQUIRE(center >= 0);
  const FamilyOracle all = enumerate_offsets(1.0, 1.5, 2.0);
  CHECK(all.count == 26);
  CHECK(static_cast<int>(f.neighbors_of(center).size()) == all.count);

  const Vec3& xi = c.positions[center];
  int axis = 0, diag = 0, corner = 0;
  double m_partial = 0.0;
  for (std::size_t k = 0; k < f.neighbors_of(center).size(); ++k) {
    const Index j = f.neighbors_of(center)[k];
    const double r = (c.positions[j] - xi).norm();
    const double v = f.volumes_of(center)[k];
    if (std::abs(r - 1.0) < 1e-12) {
      ++axis;
      CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    } else if (std::abs(r - std::sqrt(2.0)) < 1e-12) {
      ++diag;
      CHECK(v == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-14));
    } else {
      ++corner;
      CHECK(v == doctest::Approx(2.0 - std::sqrt(3.0)).epsilon(1e-14));
    }
    if (r < 1.5) m_partial += r * r * v;
  }
  CHECK(axis == 6);
  CHECK(diag == 12);
  CHECK(corner == 8);
  // Axis plus face-diagonal shell alone: 6 + 12 * 2 * 0.5858.
  CHECK(m_partial == doctest::Approx(20.0589).epsilon(1e-4));
  CHECK(enumerate_offsets(1.0, 1.5, std::sqrt(2.0)).count == 18);

  const VectorXd m = weighted_volume(c, f, InfluenceFunction{InfluenceKind::Constant, 1.5});
  CHECK(m[center] == doctest::Approx(all.m).epsilon(1e-13));
  CHECK(m[center] == doctest::Approx(26.4906).epsilon(1e-4));
}

TEST_CASE("families are symmetric and bond volumes reciprocal") {
  const PointCloud c = generate_point_cloud(box(0, 1, 0, 0.75, 0, 0.5), 0.125);
  const Family f = build_families(c, 0.3);
  for (Index i = 0; i < c.size(); ++i) {
    for (std::size_t k = 0; k < f.neighbors_of(i).size(); ++k) {
      const Index j = f.neighbors_of(i)[k];
      CHECK(j != i);
      CHECK(f.bond_volume(j, i) == doctest::Approx(f.volumes_of(i)[k]).epsilon(1e-15));
      CHECK((c.positions[j] - c.positions[i]).norm() <= f.radius() + 1e-12);
    }
  }
}

TEST_CASE("prenotch filter") {
  PrenotchPlane p;
  p.axis = 0;
  p.value = 0.0;
  p.first = {1, 4};
  p.second = {-2, 2};
  CHECK(p.cuts(Vec3(-0.25, 2, 0), Vec3(0.25, 2, 0)));
  CHECK_FALSE(p.cuts(Vec3(-0.25, 0, 0), Vec3(0.25, 0, 0)));
  CHECK_FALSE(p.cuts(Vec3(0.25, 2, 0), Vec3(0.75, 2, 0)));

  const PointCloud c = generate_point_cloud(box(-1, 1, 0, 5, -2, 2), 0.5);
  const Family f = build_families(c, 0.75);
  const Family cut = apply_prenotch_filter(f, c, p);
  CHECK(cut.num_bonds() < f.num_bonds());
  Index removed = 0;
  for (Index i = 0; i < c.size(); ++i) {
    for (Index j : f.neighbors_of(i)) {
      const bool crosses = p.cuts(c.positions[i], c.positions[j]);
      CHECK((cut.bond_volume(i, j) > 0.0) == !crosses);
      if (crosses) ++removed;
    }
  }
  CHECK(removed == f.num_bonds() - cut.num_bonds());
}

TEST_CASE("mesh location") {
  const HexMesh m = generate_hex_mesh(cube(0, 1), 0.5);
  const MeshLocation centroid = locate_in_mesh(m, Vec3(0.25, 0.75, 0.25));
  CHECK(centroid.reference.norm() < 1e-14);
  CHECK(map_to_physical(m, centroid.cell, centroid.reference).isApprox(Vec3(0.25, 0.75, 0.25)));

  const MeshLocation corner = locate_in_mesh(m, Vec3(0.5, 0.5, 0.5));
  for (int a = 0; a < 3; ++a) CHECK(std::abs(corner.reference[a]) == doctest::Approx(1.0));
  CHECK(map_to_physical(m, corner.cell, corner.reference).isApprox(Vec3(0.5, 0.5, 0.5)));

  CHECK_THROWS_AS(locate_in_mesh(m, Vec3(2.0, 0.5, 0.5)), LocationError);

  const auto n = hex_shape_values(Vec3(0.3, -0.2, 0.7));
  double sum = 0.0;
  for (double v : n) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
}
