#include "pdc/lps.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pdc {

MaterialParams MaterialParams::from_bulk_poisson(double K, double nu) {
  if (!(nu > -1.0 && nu < 0.5)) throw ParameterError("Poisson ratio must lie in (-1, 0.5)");
  return {K, 3.0 * K * (1.0 - 2.0 * nu) / (2.0 * (1.0 + nu))};
}

MaterialParams MaterialParams::from_lame(double lambda, double mu) { return {lambda + 2.0 * mu / 3.0, mu}; }

void MaterialParams::validate() const {
  if (!(K > 0.0)) throw ParameterError("bulk modulus K must be positive");
  if (!(G > 0.0)) throw ParameterError("shear modulus G must be positive");
}

double InfluenceFunction::value(double r) const { return r > horizon ? 0.0 : profile(r); }

const char* to_string(InfluenceKind k) {
  return k == InfluenceKind::Constant ? "constant" : "inverse-distance";
}

VectorXd weighted_volume(const PointCloud& cloud, const Family& family, const InfluenceFunction& kappa) {
  const Index n = family.size();
  if (n != cloud.size()) throw ShapeError("family and cloud sizes differ");
  VectorXd m = VectorXd::Zero(n);
  std::vector<Index> empty;
  for (Index i = 0; i < n; ++i) {
    auto nb = family.neighbors_of(i);
    auto vol = family.volumes_of(i);
    if (nb.empty()) {
      empty.push_back(i);
      continue;
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const Vec3 xi = cloud.positions[nb[k]] - cloud.positions[i];
      const double r2 = xi.squaredNorm();
      acc += kappa.profile(std::sqrt(r2)) * r2 * vol[k];
    }
    m[i] = acc;
  }
  if (!empty.empty()) {
    std::ostringstream os;
    os << empty.size() << " point(s) have empty families, first at " << format_point(cloud.positions[empty[0]])
       << " (index " << empty[0] << ")";
    throw DegeneratePointError(std::move(empty), os.str());
  }
  return m;
}

VectorXd dilatation(const PointCloud& cloud, const Family& family, const InfluenceFunction& kappa,
                    const VectorXd& m, const VectorXd& u) {
  const Index n = cloud.size();
  if (family.size() != n || m.size() != n || u.size() != 3 * n) {
    throw ShapeError("dilatation: cloud, family, m and u lengths are inconsistent");
  }
  VectorXd theta(n);
  for (Index i = 0; i < n; ++i) {
    auto nb = family.neighbors_of(i);
    auto vol = family.volumes_of(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const Index j = nb[k];
      const Vec3 xi = cloud.positions[j] - cloud.positions[i];
      acc += kappa.profile(xi.norm()) * xi.dot(u.segment<3>(3 * j) - u.segment<3>(3 * i)) * vol[k];
    }
    theta[i] = 3.0 * acc / m[i];
  }
  return theta;
}

void check_coverage(const PointCloud& cloud, const std::vector<Index>& rows, double reach, const BoxUnion& body) {
  if (cloud.size() == 0 || rows.empty()) return;
  const double h = cloud.spacing;
  const int r = static_cast<int>(std::floor(reach / h + 1e-9));
  std::vector<LatticeIndex> stencil;
  for (int k = -r; k <= r; ++k)
    for (int j = -r; j <= r; ++j)
      for (int i = -r; i <= r; ++i)
        if (h * std::sqrt(double(i * i + j * j + k * k)) <= reach * (1.0 + 1e-12)) stencil.push_back({i, j, k});

  // Dense occupancy over the lattice bounding box.
  LatticeIndex lo = cloud.lattice[0], hi = cloud.lattice[0];
  for (const auto& ijk : cloud.lattice) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], ijk[a]);
      hi[a] = std::max(hi[a], ijk[a]);
    }
  }
  const std::array<Index, 3> ext{hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1};
  std::vector<char> occupied(ext[0] * ext[1] * ext[2], 0);
  auto slot = [&](const LatticeIndex& s) -> Index {
    for (int a = 0; a < 3; ++a)
      if (s[a] < lo[a] || s[a] > hi[a]) return -1;
    return (Index(s[2] - lo[2]) * ext[1] + (s[1] - lo[1])) * ext[0] + (s[0] - lo[0]);
  };
  for (const auto& ijk : cloud.lattice) occupied[slot(ijk)] = 1;

  const double tol = 1e-9 * h;
  for (Index p : rows) {
    const LatticeIndex& c = cloud.lattice[p];
    for (const auto& d : stencil) {
      const LatticeIndex s{c[0] + d[0], c[1] + d[1], c[2] + d[2]};
      const Index q = slot(s);
      if (q >= 0 && occupied[q]) continue;
      const Vec3 x = cloud.anchor + h * Vec3(s[0] + 0.5, s[1] + 0.5, s[2] + 0.5);
      if (!body.contains(x, tol)) continue;
      std::ostringstream os;
      os << "point " << p << " at " << format_point(cloud.positions[p]) << " needs data within " << reach
         << " but the cloud has no point at " << format_point(x);
      throw CoverageError(p, os.str());
    }
  }
}

LpsOperator::LpsOperator(const PointCloud& cloud, const Family& family, const MaterialParams& params,
                         const InfluenceFunction& kappa, LpsOptions options)
    : cloud_(cloud),
      family_(family),
      kappa_(kappa),
      alpha_(3.0 * params.K - 5.0 * params.G),
      beta_(15.0 * params.G),
      n_(cloud.size()) {
  params.validate();
  if (family.size() != n_) throw ShapeError("family and cloud sizes differ");
  m_ = weighted_volume(cloud, family, kappa);
  rows_ = std::move(options.rows);
  if (rows_.empty()) {
    rows_.resize(n_);
    for (Index i = 0; i < n_; ++i) rows_[i] = i;
  }
  std::sort(rows_.begin(), rows_.end());
  is_row_.assign(n_, 0);
  for (Index i : rows_) is_row_[i] = 1;
  if (options.check_coverage) {
    check_coverage(cloud, rows_, 2.0 * family.horizon, options.body ? *options.body : cloud.domain);
  }
  std::vector<char> need(n_, 0);
  for (Index i : rows_) {
    need[i] = 1;
    for (Index j : family.neighbors_of(i)) need[j] = 1;
  }
  for (Index i = 0; i < n_; ++i)
    if (need[i]) theta_points_.push_back(i);
  diagonal_ = compute_diagonal();
  symmetric_ = probe_asymmetry(*this) <= 1e-11;
}

void LpsOperator::compute_theta(const VectorXd& u, VectorXd& theta) const {
  theta.setZero(n_);
  for (Index k : theta_points_) {
    auto nb = family_.neighbors_of(k);
    auto vol = family_.volumes_of(k);
    const Vec3 xk = cloud_.positions[k];
    const Vec3 uk = u.segment<3>(3 * k);
    double acc = 0.0;
    for (std::size_t b = 0; b < nb.size(); ++b) {
      const Vec3 xi = cloud_.positions[nb[b]] - xk;
      acc += kappa_.profile(xi.norm()) * vol[b] * xi.dot(u.segment<3>(3 * nb[b]) - uk);
    }
    theta[k] = 3.0 * acc / m_[k];
  }
}

void LpsOperator::apply(const VectorXd& u, VectorXd& y) const {
  if (u.size() != 3 * n_) throw ShapeError("LPS apply: input length mismatch");
  compute_theta(u, theta_);
  y = u;
  for (Index i : rows_) {
    auto nb = family_.neighbors_of(i);
    auto vol = family_.volumes_of(i);
    const Vec3 xi0 = cloud_.positions[i];
    const Vec3 ui = u.segment<3>(3 * i);
    const double inv_mi = 1.0 / m_[i];
    const double ti = theta_[i] * inv_mi;
    Vec3 acc = Vec3::Zero();
    for (std::size_t b = 0; b < nb.size(); ++b) {
      const Index j = nb[b];
      const Vec3 xi = cloud_.positions[j] - xi0;
      const double r2 = xi.squaredNorm();
      const double w = kappa_.profile(std::sqrt(r2)) * vol[b];
      const double inv_mj = 1.0 / m_[j];
      const double stretch = xi.dot(u.segment<3>(3 * j) - ui) / r2;
      acc += w * (alpha_ * (ti + theta_[j] * inv_mj) + beta_ * (inv_mi + inv_mj) * stretch) * xi;
    }
    y.segment<3>(3 * i) = -acc;
  }
}

void LpsOperator::apply_transpose(const VectorXd& x, VectorXd& y) const {
  if (x.size() != 3 * n_) throw ShapeError("LPS transpose apply: input length mismatch");
  y.setZero(3 * n_);
  VectorXd s = VectorXd::Zero(n_);
  for (Index i = 0; i < n_; ++i)
    if (!is_row_[i]) y.segment<3>(3 * i) += x.segment<3>(3 * i);
  for (Index i : rows_) {
    auto nb = family_.neighbors_of(i);
    auto vol = family_.volumes_of(i);
    const Vec3 xi0 = cloud_.positions[i];
    const Vec3 xr = x.segment<3>(3 * i);
    const double inv_mi = 1.0 / m_[i];
    for (std::size_t b = 0; b < nb.size(); ++b) {
      const Index j = nb[b];
      const Vec3 xi = cloud_.positions[j] - xi0;
      const double r2 = xi.squaredNorm();
      const double w = kappa_.profile(std::sqrt(r2)) * vol[b];
      const double inv_mj = 1.0 / m_[j];
      const double proj = xi.dot(xr);
      const Vec3 dev = (beta_ * w * (inv_mi + inv_mj) * proj / r2) * xi;
      y.segment<3>(3 * j) -= dev;
      y.segment<3>(3 * i) += dev;
      s[i] -= alpha_ * w * proj * inv_mi;
      s[j] -= alpha_ * w * proj * inv_mj;
    }
  }
  for (Index k : theta_points_) {
    if (s[k] == 0.0) continue;
    auto nb = family_.neighbors_of(k);
    auto vol = family_.volumes_of(k);
    const Vec3 xk = cloud_.positions[k];
    const double c = 3.0 * s[k] / m_[k];
    for (std::size_t b = 0; b < nb.size(); ++b) {
      const Vec3 xi = cloud_.positions[nb[b]] - xk;
      const Vec3 t = (c * kappa_.profile(xi.norm()) * vol[b]) * xi;
      y.segment<3>(3 * nb[b]) += t;
      y.segment<3>(3 * k) -= t;
    }
  }
}

VectorXd LpsOperator::compute_diagonal() const {
  VectorXd d = VectorXd::Ones(3 * n_);
  for (Index i : rows_) {
    auto nb = family_.neighbors_of(i);
    auto vol = family_.volumes_of(i);
    const Vec3 xi0 = cloud_.positions[i];
    const double inv_mi = 1.0 / m_[i];
    Mat3 block = Mat3::Zero();
    Vec3 s = Vec3::Zero();
    for (std::size_t b = 0; b < nb.size(); ++b) {
      const Index j = nb[b];
      const Vec3 xi = cloud_.positions[j] - xi0;
      const double r2 = xi.squaredNorm();
      const double kap = kappa_.profile(std::sqrt(r2));
      const double wij = kap * vol[b];
      const double wji = kap * family_.bond_volume(j, i);
      const double inv_mj = 1.0 / m_[j];
      block += (beta_ * wij * (inv_mi + inv_mj) / r2) * xi * xi.transpose();
      block += (3.0 * alpha_ * wij * wji * inv_mj * inv_mj) * xi * xi.transpose();
      s += wij * xi;
    }
    block += (3.0 * alpha_ * inv_mi * inv_mi) * s * s.transpose();
    d.segment<3>(3 * i) = block.diagonal();
  }
  return d;
}

BlockSparseMatrix LpsOperator::assemble() const {
  // Dilatation row of point k: theta_k = sum_l Theta_kl u_l.
  auto theta_row = [&](Index k, std::vector<std::pair<Index, Vec3>>& out) {
    out.clear();
    auto nb = family_.neighbors_of(k);
    auto vol = family_.volumes_of(k);
    const double c = 3.0 / m_[k];
    Vec3 self = Vec3::Zero();
    for (std::size_t b = 0; b < nb.size(); ++b) {
      const Vec3 xi = cloud_.positions[nb[b]] - cloud_.positions[k];
      const Vec3 t = c * kappa_.profile(xi.norm()) * vol[b] * xi;
      out.emplace_back(nb[b], t);
      self -= t;
    }
    out.emplace_back(k, self);
  };

  // Dense scatter row: slot[j] indexes acc for the current row.
  std::vector<Index> slot(n_, -1), touched;
  std::vector<Mat3> acc;
  auto add = [&](Index j, const Mat3& v) {
    if (slot[j] < 0) {
      slot[j] = static_cast<Index>(touched.size());
      touched.push_back(j);
      acc.push_back(v);
    } else {
      acc[slot[j]] += v;
    }
  };

  std::vector<Index> row_ptr{0}, col_idx;
  std::vector<Mat3> blocks;
  std::vector<std::pair<Index, Vec3>> trow;
  for (Index i = 0; i < n_; ++i) {
    if (!is_row_[i]) {
      col_idx.push_back(i);
      blocks.push_back(Mat3::Identity());
      row_ptr.push_back(static_cast<Index>(col_idx.size()));
      continue;
    }
    auto nb = family_.neighbors_of(i);
    auto vol = family_.volumes_of(i);
    const double inv_mi = 1.0 / m_[i];
    Vec3 c_self = Vec3::Zero();
    Mat3 diag = Mat3::Zero();
    for (std::size_t b = 0; b < nb.size(); ++b) {
      const Index j = nb[b];
      const Vec3 xi = cloud_.positions[j] - cloud_.positions[i];
      const double r2 = xi.squaredNorm();
      const double w = kappa_.profile(std::sqrt(r2)) * vol[b];
      const double inv_mj = 1.0 / m_[j];
      const Mat3 dev = (beta_ * w * (inv_mi + inv_mj) / r2) * xi * xi.transpose();
      add(j, -dev);
      diag += dev;
      // Coefficient of theta_j in row i.
      const Vec3 c_j = -alpha_ * w * inv_mj * xi;
      theta_row(j, trow);
      for (const auto& [l, t] : trow) add(l, c_j * t.transpose());
      c_self -= alpha_ * w * inv_mi * xi;
    }
    add(i, diag);
    theta_row(i, trow);
    for (const auto& [l, t] : trow) add(l, c_self * t.transpose());

    std::vector<Index> order(touched);
    std::sort(order.begin(), order.end());
    for (Index j : order) {
      col_idx.push_back(j);
      blocks.push_back(acc[slot[j]]);
    }
    for (Index j : touched) slot[j] = -1;
    touched.clear();
    acc.clear();
    row_ptr.push_back(static_cast<Index>(col_idx.size()));
  }
  BlockSparseMatrix a(n_, n_, std::move(row_ptr), std::move(col_idx), std::move(blocks));
  a.mark_symmetric();
  return a;
}

BlockSparseMatrix assemble_lps_operator(const PointCloud& cloud, const Family& family, const MaterialParams& params,
                                        const InfluenceFunction& kappa, LpsOptions options) {
  return LpsOperator(cloud, family, params, kappa, std::move(options)).assemble();
}

VectorXd lps_apply_oracle(const PointCloud& cloud, const Family& family, const MaterialParams& params,
                          const InfluenceFunction& kappa, const VectorXd& u) {
  params.validate();
  const Index n = cloud.size();
  if (u.size() != 3 * n) throw ShapeError("oracle: displacement length mismatch");
  const VectorXd m = weighted_volume(cloud, family, kappa);
  const VectorXd theta = dilatation(cloud, family, kappa, m, u);
  const double K = params.K, G = params.G;

  // T[x_p]<x_q - x_p>
  auto force_state = [&](Index p, Index q) -> Vec3 {
    const Vec3 xi = cloud.positions[q] - cloud.positions[p];
    const Vec3 eta = u.segment<3>(3 * q) - u.segment<3>(3 * p);
    const double k = kappa.profile(xi.norm());
    const Mat3 proj = xi * xi.transpose() / xi.squaredNorm();
    return (k / m[p]) * ((3.0 * K - 5.0 * G) * theta[p] * xi + 15.0 * G * proj * eta);
  };

  VectorXd f = VectorXd::Zero(3 * n);
  for (Index i = 0; i < n; ++i) {
    auto nb = family.neighbors_of(i);
    auto vol = family.volumes_of(i);
    Vec3 acc = Vec3::Zero();
    for (std::size_t b = 0; b < nb.size(); ++b) acc += (force_state(i, nb[b]) - force_state(nb[b], i)) * vol[b];
    f.segment<3>(3 * i) = acc;
  }
  return f;
}

}  // namespace pdc
