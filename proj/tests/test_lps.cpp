#include "helpers.hpp"
#include "pdc/lps.hpp"

#include <doctest.h>

#include <numbers>

using namespace pdc;
using pdc::test::box;
using pdc::test::cube;
using pdc::test::field_at;
using pdc::test::random_field;

namespace {

const MaterialParams kSteel = MaterialParams::from_lame(109.62, 73.08);

InfluenceFunction constant(double delta) { return {InfluenceKind::Constant, delta}; }

// Force density at one point written out from the state definitions,
// independent of the library's dilatation and oracle routines.
Vec3 direct_force(const PointCloud& c, const Family& f, const MaterialParams& p, const InfluenceFunction& k,
                  const VectorXd& u, Index i) {
  auto m_of = [&](Index a) {
    double m = 0.0;
    for (std::size_t b = 0; b < f.neighbors_of(a).size(); ++b) {
      const Vec3 xi = c.positions[f.neighbors_of(a)[b]] - c.positions[a];
      m += k.profile(xi.norm()) * xi.squaredNorm() * f.volumes_of(a)[b];
    }
    return m;
  };
  auto theta_of = [&](Index a) {
    double t = 0.0;
    for (std::size_t b = 0; b < f.neighbors_of(a).size(); ++b) {
      const Index j = f.neighbors_of(a)[b];
      const Vec3 xi = c.positions[j] - c.positions[a];
      t += k.profile(xi.norm()) * xi.dot(u.segment<3>(3 * j) - u.segment<3>(3 * a)) * f.volumes_of(a)[b];
    }
    return 3.0 * t / m_of(a);
  };
  auto t_state = [&](Index a, Index b) -> Vec3 {
    const Vec3 xi = c.positions[b] - c.positions[a];
    const Vec3 eta = u.segment<3>(3 * b) - u.segment<3>(3 * a);
    const double e_d = xi.dot(eta) / xi.norm() - theta_of(a) * xi.norm() / 3.0;
    const double kk = k.profile(xi.norm());
    const double t = (3.0 * p.K * theta_of(a) * kk * xi.norm() / m_of(a)) + (15.0 * p.G / m_of(a)) * kk * e_d;
    return t * xi / xi.norm();
  };
  Vec3 acc = Vec3::Zero();
  for (std::size_t b = 0; b < f.neighbors_of(i).size(); ++b) {
    const Index j = f.neighbors_of(i)[b];
    acc += (t_state(i, j) - t_state(j, i)) * f.volumes_of(i)[b];
  }
  return acc;
}

}  // namespace

TEST_CASE("assembled operator matches the nested-loop oracle on random fields") {
  const PointCloud c = generate_point_cloud(box(0, 8, 0, 8, 0, 7), 1.0);
  REQUIRE(c.size() <= 500);
  for (InfluenceKind kind : {InfluenceKind::Constant, InfluenceKind::InverseDistance}) {
    const InfluenceFunction k{kind, 2.5};
    const Family f = build_families(c, 2.5);
    const BlockSparseMatrix a = assemble_lps_operator(c, f, kSteel, k);
    const double norm_a = a.dense().cwiseAbs().rowwise().sum().maxCoeff();
    for (unsigned seed : {1u, 2u, 3u}) {
      const VectorXd u = random_field(3 * c.size(), seed);
      const VectorXd oracle = lps_apply_oracle(c, f, kSteel, k, u);
      CHECK((a * u + oracle).cwiseAbs().maxCoeff() <= 1e-12 * norm_a);
    }
    // The operator itself (matrix-free) agrees with its assembled form.
    const LpsOperator op(c, f, kSteel, k);
    const VectorXd u = random_field(3 * c.size(), 9);
    CHECK((op * u - a * u).cwiseAbs().maxCoeff() <= 1e-12 * norm_a);
    VectorXd at;
    op.apply_transpose(u, at);
    CHECK((at - a.dense().transpose() * u).cwiseAbs().maxCoeff() <= 1e-12 * norm_a);
  }
}

TEST_CASE("oracle agrees with force states written from their definitions") {
  const PointCloud c = generate_point_cloud(box(0, 5, 0, 4, 0, 4), 1.0);
  const InfluenceFunction k{InfluenceKind::InverseDistance, 1.8};
  const Family f = build_families(c, 1.8);
  const VectorXd u = random_field(3 * c.size(), 4);
  const VectorXd oracle = lps_apply_oracle(c, f, kSteel, k, u);
  for (Index i : {Index{0}, Index{17}, c.size() / 2, c.size() - 1}) {
    const Vec3 ref = direct_force(c, f, kSteel, k, u, i);
    CHECK((oracle.segment<3>(3 * i) - ref).norm() <= 1e-11 * std::max(1.0, ref.norm()));
  }
}

TEST_CASE("dilatation of a uniform expansion is exact on any grid") {
  const BoxUnion shape({Box{Vec3(0, 0, 0), Vec3(1, 0.5, 0.5)}, Box{Vec3(0, 0.5, 0), Vec3(0.25, 1, 0.5)}});
  for (double delta : {0.25, 0.4}) {
    const PointCloud c = generate_point_cloud(shape, 0.125);
    const Family f = build_families(c, delta);
    for (InfluenceKind kind : {InfluenceKind::Constant, InfluenceKind::InverseDistance}) {
      const InfluenceFunction k{kind, delta};
      const VectorXd m = weighted_volume(c, f, k);
      for (double alpha : {1.0, -0.3, 1e5}) {
        const VectorXd u = field_at(c.positions, [&](const Vec3& x) { return Vec3(alpha * x); });
        const VectorXd theta = dilatation(c, f, k, m, u);
        CHECK((theta.array() - 3.0 * alpha).abs().maxCoeff() <= 1e-12 * std::abs(3.0 * alpha));
      }
      CHECK(dilatation(c, f, k, m, VectorXd::Zero(3 * c.size())).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("shear field has zero dilatation on symmetric families") {
  const PointCloud c = generate_point_cloud(cube(0, 9), 1.0);
  const Family f = build_families(c, 2.5);
  const InfluenceFunction k = constant(2.5);
  const VectorXd m = weighted_volume(c, f, k);
  const double gamma = 0.7;
  const VectorXd u = field_at(c.positions, [&](const Vec3& x) { return Vec3(0, gamma * x[0], 0); });
  const VectorXd theta = dilatation(c, f, k, m, u);
  const Index center = c.find({4, 4, 4});
  CHECK(std::abs(theta[center]) <= 1e-13);
}

TEST_CASE("weighted volume: single bond and continuum limit") {
  PointCloud two = generate_point_cloud(box(0, 2, 0, 1, 0, 1), 1.0);
  const Family f = build_families(two, 1.0, PartialVolumeRule::Full);
  const VectorXd m = weighted_volume(two, f, constant(1.0));
  CHECK(m[0] == doctest::Approx(1.0).epsilon(1e-15));

  // m -> 4 pi delta^5 / 5 for constant kappa; the Riemann-sum error shrinks under refinement.
  const double delta = 1.0, exact = 4.0 * std::numbers::pi * std::pow(delta, 5) / 5.0;
  double last = 1e300;
  for (int n : {3, 4, 6}) {
    const double h = delta / n;
    const double side = 2.0 * (delta + h);
    const PointCloud c = generate_point_cloud(cube(0, side), h);
    const Family fam = build_families(c, delta);
    const VectorXd mm = weighted_volume(c, fam, constant(delta));
    const int mid = static_cast<int>(std::lround(side / h)) / 2;
    const Index center = c.find({mid, mid, mid});
    REQUIRE(center >= 0);
    const double err = std::abs(mm[center] - exact) / exact;
    CHECK(err < last);
    last = err;
  }
  CHECK(last < 0.02);
}

TEST_CASE("isolated point is degenerate") {
  const PointCloud c = generate_point_cloud(box(0, 1, 0, 1, 0, 1), 1.0);
  const Family f = build_families(c, 1.0);
  CHECK_THROWS_AS(weighted_volume(c, f, constant(1.0)), DegeneratePointError);
}

TEST_CASE("translations and block-row sums") {
  const PointCloud c = generate_point_cloud(box(0, 1, 0, 0.75, 0, 0.75), 0.125);
  const Family f = build_families(c, 0.375);
  const LpsOperator op(c, f, kSteel, constant(0.375));
  const BlockSparseMatrix a = op.assemble();
  const double norm_a = a.max_abs();
  for (const Vec3& t : {Vec3(1, 0, 0), Vec3(0, -2, 0), Vec3(0.3, 0.4, -0.5)}) {
    const VectorXd u = field_at(c.positions, [&](const Vec3&) { return t; });
    CHECK((op * u).cwiseAbs().maxCoeff() <= 1e-10 * norm_a * t.cwiseAbs().maxCoeff());
  }
  double worst = 0.0;
  for (Index i = 0; i < a.block_rows(); ++i) {
    Mat3 sum = Mat3::Zero();
    for (Index k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) sum += a.blocks()[k];
    worst = std::max(worst, sum.cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-12 * norm_a);
  CHECK(op.symmetric());
  CHECK(a.asymmetry() <= 1e-12);
}

TEST_CASE("linear field is annihilated where the 2-delta neighborhood is full") {
  const double h = 0.125, delta = 0.25;
  const PointCloud c = generate_point_cloud(cube(0, 1.5), h);
  const Family f = build_families(c, delta);
  const VectorXd u = field_at(c.positions, [](const Vec3& x) { return Vec3(x[0], 0, 0); });
  const VectorXd oracle = lps_apply_oracle(c, f, kSteel, constant(delta), u);
  const double reach = 2.0 * delta + h / 2;
  Index checked = 0;
  for (Index i = 0; i < c.size(); ++i) {
    const Vec3& x = c.positions[i];
    if ((x.array() < reach).any() || (x.array() > 1.5 - reach).any()) continue;
    CHECK(oracle.segment<3>(3 * i).norm() <= 1e-9);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("quadratic field approaches the Navier-Cauchy force density") {
  // div sigma of (x^2, 0, 0) is (2 lambda + 4 mu, 0, 0).
  const double target = 2.0 * kSteel.lambda() + 4.0 * kSteel.mu();
  const double delta = 0.3;
  double last = 1e300;
  for (double h : {0.1, 0.05}) {
    const double side = 4.0 * delta + 2.0 * h;
    const PointCloud c = generate_point_cloud(cube(0, side), h);
    const Family f = build_families(c, delta);
    const int mid = static_cast<int>(std::lround(side / h)) / 2;
    const Index center = c.find({mid, mid, mid});
    REQUIRE(center >= 0);
    const VectorXd u = field_at(c.positions, [](const Vec3& x) { return Vec3(x[0] * x[0], 0, 0); });
    const LpsOperator op(c, f, kSteel, constant(delta));
    const Vec3 lu = -(op * u).segment<3>(3 * center);
    const double err = (lu - Vec3(target, 0, 0)).norm() / target;
    CHECK(err < last);
    last = err;
  }
  CHECK(last < 0.05);
}

TEST_CASE("coverage gap is reported with the point") {
  const BoxUnion body = cube(0, 1);
  PointCloud c = generate_point_cloud(body, 0.25);
  const Family f = build_families(c, 0.25);
  // Ask for the full reach of a point near the middle inside a body larger than the cloud.
  const Index p = c.find({1, 1, 1});
  CHECK_THROWS_AS(check_coverage(c, {p}, 0.5, cube(-1, 2)), CoverageError);
  CHECK_NOTHROW(check_coverage(c, {p}, 0.5, body));
}
