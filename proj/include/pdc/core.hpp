#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VectorXd = Eigen::VectorXd;
using Index = std::ptrdiff_t;

// Integer lattice coordinates of a grid cell or node.
using LatticeIndex = std::array<int, 3>;

std::string format_point(const Vec3& x);

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// geometry
class AlignmentError : public Error {
 public:
  AlignmentError(std::size_t box, int axis, const std::string& what)
      : Error(what), box_(box), axis_(axis) {}
  std::size_t box() const { return box_; }
  int axis() const { return axis_; }

 private:
  std::size_t box_;
  int axis_;
};

class ClassificationError : public Error {
 public:
  ClassificationError(const Vec3& x, const std::string& what) : Error(what), point_(x) {}
  const Vec3& point() const { return point_; }

 private:
  Vec3 point_;
};

class LocationError : public Error {
 public:
  LocationError(const Vec3& x, const std::string& what) : Error(what), point_(x) {}
  const Vec3& point() const { return point_; }

 private:
  Vec3 point_;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

// lps
class DegeneratePointError : public Error {
 public:
  DegeneratePointError(std::vector<Index> points, const std::string& what)
      : Error(what), points_(std::move(points)) {}
  const std::vector<Index>& points() const { return points_; }

 private:
  std::vector<Index> points_;
};

class CoverageError : public Error {
 public:
  CoverageError(Index point, const std::string& what) : Error(what), point_(point) {}
  Index point() const { return point_; }

 private:
  Index point_;
};

// local_fem
class AssemblyError : public Error {
 public:
  AssemblyError(Index cell, const std::string& what) : Error(what), cell_(cell) {}
  Index cell() const { return cell_; }

 private:
  Index cell_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// linsolve
class DispatchError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  SolverError(std::vector<double> history, const std::string& what)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace pdc
