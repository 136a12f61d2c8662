#pragma once

#include "pdc/geometry.hpp"
#include "pdc/sparse.hpp"

#include <optional>

namespace pdc {

/// Isotropic elastic constants in MPa.
struct MaterialParams {
  double K = 0.0;
  double G = 0.0;

  static MaterialParams from_bulk_poisson(double K, double nu);
  static MaterialParams from_lame(double lambda, double mu);

  double lambda() const { return K - 2.0 * G / 3.0; }
  double mu() const { return G; }
  double poisson() const { return (3.0 * K - 2.0 * G) / (2.0 * (3.0 * K + G)); }
  void validate() const;
};

enum class InfluenceKind { Constant, InverseDistance };

struct InfluenceFunction {
  InfluenceKind kind = InfluenceKind::Constant;
  double horizon = 0.0;

  /// kappa(r): zero beyond the horizon.
  double value(double r) const;
  /// The radial profile without the cutoff. Discrete sums use this so that
  /// bonds in the partial-volume shell keep their weight.
  double profile(double r) const { return kind == InfluenceKind::Constant ? 1.0 : 1.0 / r; }
};

const char* to_string(InfluenceKind k);

/// m_i = sum_j kappa |xi|^2 V_j^(i).
VectorXd weighted_volume(const PointCloud& cloud, const Family& family, const InfluenceFunction& kappa);

/// theta_i = 3/m_i sum_j kappa xi . (u_j - u_i) V_j^(i). u is a flat 3N vector.
VectorXd dilatation(const PointCloud& cloud, const Family& family, const InfluenceFunction& kappa,
                    const VectorXd& m, const VectorXd& u);

/// Throws CoverageError if some lattice site within `reach` of a row point
/// lies inside `body` but is missing from the cloud.
void check_coverage(const PointCloud& cloud, const std::vector<Index>& rows, double reach, const BoxUnion& body);

struct LpsOptions {
  /// Points whose rows carry the discrete operator; other rows are identity.
  /// Empty means every point.
  std::vector<Index> rows;
  /// Region that clips the coverage check; defaults to the cloud's own domain.
  std::optional<BoxUnion> body;
  bool check_coverage = true;
};

/// Matrix-free linearized LPS operator A = -L^h.
class LpsOperator final : public LinearOperator {
 public:
  LpsOperator(const PointCloud& cloud, const Family& family, const MaterialParams& params,
              const InfluenceFunction& kappa, LpsOptions options = {});

  Index rows() const override { return 3 * n_; }
  Index cols() const override { return 3 * n_; }
  void apply(const VectorXd& u, VectorXd& y) const override;
  void apply_transpose(const VectorXd& x, VectorXd& y) const override;
  VectorXd diagonal() const override { return diagonal_; }
  bool symmetric() const override { return symmetric_; }

  const VectorXd& weighted_volumes() const { return m_; }
  const std::vector<Index>& row_points() const { return rows_; }
  BlockSparseMatrix assemble() const;
  std::shared_ptr<const BlockSparseMatrix> assembled() const override {
    return std::make_shared<const BlockSparseMatrix>(assemble());
  }

 private:
  void compute_theta(const VectorXd& u, VectorXd& theta) const;
  VectorXd compute_diagonal() const;

  const PointCloud& cloud_;
  const Family& family_;
  InfluenceFunction kappa_;
  double alpha_;
  double beta_;
  Index n_;
  VectorXd m_;
  std::vector<Index> rows_;
  std::vector<char> is_row_;
  std::vector<Index> theta_points_;
  VectorXd diagonal_;
  bool symmetric_ = false;
  mutable VectorXd theta_;
};

/// Assembled operator of every point; intended for small clouds.
BlockSparseMatrix assemble_lps_operator(const PointCloud& cloud, const Family& family, const MaterialParams& params,
                                        const InfluenceFunction& kappa, LpsOptions options = {});

/// Literal nested-loop evaluation of the force density L^h[x_i] at every point.
VectorXd lps_apply_oracle(const PointCloud& cloud, const Family& family, const MaterialParams& params,
                          const InfluenceFunction& kappa, const VectorXd& u);

}  // namespace pdc
