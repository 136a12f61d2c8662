#pragma once

#include "pdc/core.hpp"

#include <memory>
#include <string>
#include <vector>

namespace pdc {

/// The objective-based stopping rules assume a nonnegative objective.
struct OptimizerConfig {
  /// Stop when |g| <= gradient_tolerance * |g_0|.
  double gradient_tolerance = 1e-8;
  /// Stop when J <= objective_tolerance * J_0.
  double objective_tolerance = 1e-16;
  /// Absolute floor on J below which the problem counts as solved.
  double objective_floor = 0.0;
  Index max_iterations = 500;
  int memory = 20;
  double c1 = 1e-4;
  double c2 = 0.9;
  double initial_step = 1.0;
  int max_line_search = 40;

  void validate() const;
};

struct IterationRecord {
  Index iteration = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  double step = 0.0;
  int evaluations = 0;
};

class OptimizationError : public Error {
 public:
  OptimizationError(std::vector<IterationRecord> history, const std::string& what)
      : Error(what), history_(std::move(history)) {}
  const std::vector<IterationRecord>& history() const { return history_; }

 private:
  std::vector<IterationRecord> history_;
};

/// Restriction of the objective to x + a p.
class LineFunction {
 public:
  virtual ~LineFunction() = default;
  virtual double value(double a) = 0;
  /// Directional derivative at a.
  virtual double slope(double a) = 0;
  virtual VectorXd gradient(double a) = 0;
  virtual int evaluations() const = 0;
};

class Objective {
 public:
  virtual ~Objective() = default;
  virtual Index size() const = 0;
  virtual double evaluate(const VectorXd& x, VectorXd& grad) = 0;
  /// Line restriction from (x, f, g) along p. The default evaluates the full objective.
  virtual std::unique_ptr<LineFunction> line(const VectorXd& x, double f, const VectorXd& g, const VectorXd& p);
  /// Called with the accepted step so affine objectives can update cached states.
  virtual void accept(const VectorXd& /*x_new*/, double /*a*/) {}
};

struct OptimizeResult {
  VectorXd x;
  double objective = 0.0;
  VectorXd gradient;
  bool converged = false;
  std::string reason;
  Index iterations = 0;
  std::vector<IterationRecord> history;
};

/// Strong Wolfe line search. Returns the accepted step, throws OptimizationError on failure.
double strong_wolfe_search(LineFunction& line, double f0, double d0, const OptimizerConfig& cfg);

/// LBFGS with strong Wolfe line search.
OptimizeResult lbfgs(Objective& objective, const VectorXd& x0, const OptimizerConfig& cfg);

}  // namespace pdc
