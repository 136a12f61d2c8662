#include "pdc/optimizer.hpp"

#include <cmath>
#include <deque>
#include <map>
#include <sstream>

namespace pdc {

void OptimizerConfig::validate() const {
  if (!(gradient_tolerance > 0.0)) throw ParameterError("gradient tolerance must be positive");
  if (!(objective_tolerance > 0.0)) throw ParameterError("objective tolerance must be positive");
  if (memory < 1) throw ParameterError("LBFGS memory depth must be at least 1");
  if (max_iterations < 0) throw ParameterError("max_iterations must be non-negative");
  if (!(c1 > 0.0 && c1 < c2 && c2 < 1.0)) throw ParameterError("line search requires 0 < c1 < c2 < 1");
  if (!(initial_step > 0.0)) throw ParameterError("initial step must be positive");
}

namespace {

class GenericLine final : public LineFunction {
 public:
  GenericLine(Objective& obj, const VectorXd& x, double f, const VectorXd& g, const VectorXd& p)
      : obj_(obj), x_(x), p_(p) {
    cache_[0.0] = {f, g};
  }
  double value(double a) override { return at(a).first; }
  double slope(double a) override { return at(a).second.dot(p_); }
  VectorXd gradient(double a) override { return at(a).second; }
  int evaluations() const override { return evals_; }

 private:
  const std::pair<double, VectorXd>& at(double a) {
    auto it = cache_.find(a);
    if (it != cache_.end()) return it->second;
    VectorXd g;
    const double f = obj_.evaluate(x_ + a * p_, g);
    ++evals_;
    return cache_[a] = {f, std::move(g)};
  }

  Objective& obj_;
  VectorXd x_;
  VectorXd p_;
  std::map<double, std::pair<double, VectorXd>> cache_;
  int evals_ = 0;
};

double interpolate(double lo, double hi, double flo, double fhi, double dlo) {
  const double w = hi - lo;
  const double denom = 2.0 * (fhi - flo - dlo * w);
  double a = 0.5 * (lo + hi);
  if (denom > 0.0) a = lo - dlo * w * w / denom;
  const double lo_safe = std::min(lo, hi) + 0.1 * std::abs(w);
  const double hi_safe = std::max(lo, hi) - 0.1 * std::abs(w);
  if (!(a >= lo_safe && a <= hi_safe)) a = 0.5 * (lo + hi);
  return a;
}

}  // namespace

std::unique_ptr<LineFunction> Objective::line(const VectorXd& x, double f, const VectorXd& g, const VectorXd& p) {
  return std::make_unique<GenericLine>(*this, x, f, g, p);
}

double strong_wolfe_search(LineFunction& line, double f0, double d0, const OptimizerConfig& cfg) {
  if (!(d0 < 0.0)) throw OptimizationError({}, "line search called with a non-descent direction");
  auto armijo = [&](double a, double fa) { return fa <= f0 + cfg.c1 * a * d0; };
  auto curvature = [&](double da) { return std::abs(da) <= -cfg.c2 * d0; };

  auto zoom = [&](double lo, double hi, double flo, double fhi, double dlo) -> double {
    for (int j = 0; j < cfg.max_line_search; ++j) {
      const double a = interpolate(lo, hi, flo, fhi, dlo);
      const double fa = line.value(a);
      if (!armijo(a, fa) || fa >= flo) {
        hi = a;
        fhi = fa;
      } else {
        const double da = line.slope(a);
        if (curvature(da)) return a;
        if (da * (hi - lo) >= 0.0) {
          hi = lo;
          fhi = flo;
        }
        lo = a;
        flo = fa;
        dlo = da;
      }
      if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    throw OptimizationError({}, "strong Wolfe zoom failed to find an acceptable step");
  };

  double a_prev = 0.0, f_prev = f0, d_prev = d0;
  double a = cfg.initial_step;
  for (int i = 0; i < cfg.max_line_search; ++i) {
    const double fa = line.value(a);
    if (!std::isfinite(fa)) {
      a = 0.5 * (a_prev + a);
      continue;
    }
    if (!armijo(a, fa) || (i > 0 && fa >= f_prev)) return zoom(a_prev, a, f_prev, fa, d_prev);
    const double da = line.slope(a);
    if (curvature(da)) return a;
    if (da >= 0.0) return zoom(a, a_prev, fa, f_prev, da);
    a_prev = a;
    f_prev = fa;
    d_prev = da;
    a *= 2.0;
  }
  throw OptimizationError({}, "strong Wolfe bracketing phase exceeded its iteration budget");
}

OptimizeResult lbfgs(Objective& objective, const VectorXd& x0, const OptimizerConfig& cfg) {
  cfg.validate();
  if (x0.size() != objective.size()) throw ShapeError("lbfgs: initial point has the wrong length");

  OptimizeResult res;
  res.x = x0;
  res.objective = objective.evaluate(res.x, res.gradient);
  const double f_first = res.objective;
  const double g_first = res.gradient.norm();
  res.history.push_back({0, res.objective, g_first, 0.0, 1});

  std::deque<std::pair<VectorXd, VectorXd>> pairs;
  auto converged = [&](double f, double gnorm) -> const char* {
    if (gnorm == 0.0) return "zero gradient";
    if (f <= cfg.objective_floor) return "objective below floor";
    if (gnorm <= cfg.gradient_tolerance * g_first) return "gradient tolerance";
    if (f <= cfg.objective_tolerance * f_first) return "objective tolerance";
    return nullptr;
  };

  // A converged state is confirmed by a fresh full evaluation; affine updates
  // accumulate inner-solve error.
  auto confirm = [&]() -> const char* {
    VectorXd g;
    const double f = objective.evaluate(res.x, g);
    res.objective = f;
    res.gradient = g;
    return converged(f, g.norm());
  };

  if (const char* why = converged(res.objective, g_first)) {
    res.converged = true;
    res.reason = why;
    return res;
  }

  bool fresh = true;
  for (Index k = 1; k <= cfg.max_iterations; ++k) {
    // Two-loop recursion.
    VectorXd q = res.gradient;
    std::vector<double> alphas(pairs.size());
    for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
      const auto& [s, y] = pairs[i];
      alphas[i] = s.dot(q) / y.dot(s);
      q -= alphas[i] * y;
    }
    if (!pairs.empty()) {
      const auto& [s, y] = pairs.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& [s, y] = pairs[i];
      const double beta = y.dot(q) / y.dot(s);
      q += (alphas[i] - beta) * s;
    }
    VectorXd p = -q;
    double d0 = p.dot(res.gradient);
    if (!(d0 < 0.0)) {
      pairs.clear();
      p = -res.gradient;
      d0 = p.dot(res.gradient);
    }

    auto line = objective.line(res.x, res.objective, res.gradient, p);
    // Cheap line models may carry their own slope; prefer it for consistency.
    const double d_line = line->slope(0.0);
    if (d_line < 0.0) d0 = d_line;
    double a = 0.0;
    try {
      a = strong_wolfe_search(*line, res.objective, d0, cfg);
    } catch (const OptimizationError& e) {
      if (!pairs.empty()) {
        // Retry once along steepest descent before giving up.
        pairs.clear();
        continue;
      }
      std::ostringstream os;
      os << e.what() << " at iteration " << k;
      throw OptimizationError(res.history, os.str());
    }
    const double f_new = line->value(a);
    VectorXd g_new = line->gradient(a);
    const VectorXd s = a * p;
    const VectorXd y = g_new - res.gradient;
    if (s.dot(y) > 1e-14 * s.norm() * y.norm()) {
      pairs.emplace_back(s, y);
      if (static_cast<int>(pairs.size()) > cfg.memory) pairs.pop_front();
    }
    res.x += s;
    objective.accept(res.x, a);
    res.objective = f_new;
    res.gradient = std::move(g_new);
    res.iterations = k;
    fresh = false;
    res.history.push_back({k, res.objective, res.gradient.norm(), a, line->evaluations()});

    if (converged(res.objective, res.gradient.norm())) {
      const char* why = confirm();
      fresh = true;
      if (why) {
        res.converged = true;
        res.reason = why;
        res.history.back().objective = res.objective;
        res.history.back().gradient_norm = res.gradient.norm();
        return res;
      }
    }
  }
  if (!fresh) confirm();
  res.converged = false;
  res.reason = "iteration limit";
  return res;
}

}  // namespace pdc
