#pragma once

#include "pdc/geometry.hpp"

#include <cmath>
#include <random>

namespace pdc::test {

inline BoxUnion box(double x0, double x1, double y0, double y1, double z0, double z1) {
  return BoxUnion({Box{Vec3(x0, y0, z0), Vec3(x1, y1, z1)}});
}

inline BoxUnion cube(double lo, double hi) { return box(lo, hi, lo, hi, lo, hi); }

inline VectorXd random_field(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

template <class F>
VectorXd field_at(const std::vector<Vec3>& x, F f) {
  VectorXd v(3 * static_cast<Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v.segment<3>(3 * static_cast<Index>(i)) = f(x[i]);
  return v;
}

}  // namespace pdc::test
