#pragma once

#include <string_view>
#include <vector>

#include "cklemap/types.hpp"

namespace cklemap {

/// Residual vector f(x) and its Jacobian. Throw EvaluationError (or return
/// non-finite values) when f cannot be evaluated at x; the solver then
/// shrinks its trust region instead of aborting.
class LeastSquaresProblem {
 public:
  virtual ~LeastSquaresProblem() = default;

  virtual Vector residual(const Vector& x) = 0;
  virtual Matrix jacobian(const Vector& x) = 0;

  /// Gauss-Newton model at x: g = J^T f and b = J^T J, where f = residual(x)
  /// was the last residual evaluated. Override to exploit structure.
  virtual void normal_model(const Vector& x, const Vector& f, Vector& g, Matrix& b);
};

struct TrustRegionOptions {
  double ftol = 1e-8;  // relative cost decrease
  double gtol = 1e-8;  // infinity norm of J^T f
  double xtol = 1e-8;  // relative step length
  int max_iterations = 500;
  double initial_radius = -1.0;  // <= 0: 100 max(1, |x0|)
  double time_budget_s = -1.0;   // < 0: unlimited
};

enum class LsqStatus { ConvergedFtol, ConvergedGtol, ConvergedXtol, MaxIterations, Timeout };

std::string_view to_string(LsqStatus status);
bool converged(LsqStatus status);

struct LsqResult {
  Vector x;
  double cost = 0.0;          // 0.5 |f|^2 at x
  std::vector<double> costs;  // initial cost, then one entry per accepted step
  int iterations = 0;         // Jacobian evaluations
  int evaluations = 0;        // residual evaluations
  LsqStatus status = LsqStatus::MaxIterations;
  double wall_time_s = 0.0;
};

/// Trust-region Gauss-Newton with an exact (More-Sorensen style) subproblem
/// solve on the normal equations.
LsqResult trust_region_lsq(LeastSquaresProblem& problem, const Vector& x0,
                           const TrustRegionOptions& opts = {});

}  // namespace cklemap
