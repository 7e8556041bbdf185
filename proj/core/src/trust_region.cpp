#include "cklemap/trust_region.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>

#include "cklemap/error.hpp"

namespace cklemap {

void LeastSquaresProblem::normal_model(const Vector& x, const Vector& f, Vector& g, Matrix& b) {
  const Matrix j = jacobian(x);
  g.noalias() = j.transpose() * f;
  b.noalias() = j.transpose() * j;
}

std::string_view to_string(LsqStatus status) {
  switch (status) {
    case LsqStatus::ConvergedFtol: return "converged-ftol";
    case LsqStatus::ConvergedGtol: return "converged-gtol";
    case LsqStatus::ConvergedXtol: return "converged-xtol";
    case LsqStatus::MaxIterations: return "max-iter";
    case LsqStatus::Timeout: return "timeout";
  }
  return "unknown";
}

bool converged(LsqStatus status) {
  return status == LsqStatus::ConvergedFtol || status == LsqStatus::ConvergedGtol ||
         status == LsqStatus::ConvergedXtol;
}

namespace {

// argmin g.p + p.B.p/2 subject to |p| <= radius, for PSD B. Newton on the
// secular equation 1/radius - 1/|p(lambda)|, safeguarded by bisection.
Vector solve_subproblem(const Matrix& b, const Vector& g, double radius) {
  const Index n = g.size();
  const double gnorm = g.norm();
  if (gnorm == 0.0) return Vector::Zero(n);
  double lo = 0.0;
  double hi = gnorm / radius + b.norm();
  double lambda = 0.0;
  Vector best;
  Matrix shifted = b;
  for (int it = 0; it < 12; ++it) {
    shifted.diagonal() = b.diagonal().array() + lambda;
    const Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success) {
      lo = lambda;
      lambda = lambda == 0.0 ? std::min(gnorm / radius, hi) : std::sqrt(lo * hi);
      continue;
    }
    Vector p = -llt.solve(g);
    const double np = p.norm();
    if (!std::isfinite(np)) {
      lo = lambda;
      lambda = lambda == 0.0 ? std::min(gnorm / radius, hi) : std::sqrt(lo * hi);
      continue;
    }
    if (np <= radius) best = p;
    if ((lambda == 0.0 && np <= radius) || std::abs(np - radius) <= 0.1 * radius) return p;
    if (np > radius) lo = lambda;
    else hi = lambda;
    const Vector q = llt.matrixL().solve(p);
    double next = lambda + (np / q.norm()) * (np / q.norm()) * (np - radius) / radius;
    if (!(next > lo && next < hi)) next = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    lambda = next;
  }
  if (best.size() == n) return best;
  // Fall back to the steepest-descent step on the boundary.
  return -(radius / gnorm) * g;
}

bool finite(const Vector& v) { return v.allFinite(); }

}  // namespace

LsqResult trust_region_lsq(LeastSquaresProblem& problem, const Vector& x0, const TrustRegionOptions& opts) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
  if (!finite(x0)) throw InvalidArgument("trust_region_lsq: x0 has non-finite entries");
  if (!(opts.ftol > 0.0 && opts.gtol > 0.0 && opts.xtol > 0.0)) {
    throw InvalidArgument("trust_region_lsq: tolerances must be positive");
  }

  LsqResult r;
  r.x = x0;
  Vector f = problem.residual(r.x);
  ++r.evaluations;
  if (!finite(f)) throw EvaluationError("trust_region_lsq: residual is not finite at the initial point");
  r.cost = 0.5 * f.squaredNorm();
  r.costs.push_back(r.cost);

  double radius = opts.initial_radius > 0.0 ? opts.initial_radius : 100.0 * std::max(1.0, x0.norm());
  Vector g;
  Matrix b;
  bool done = false;
  while (!done) {
    if (opts.time_budget_s >= 0.0 && elapsed() >= opts.time_budget_s) {
      r.status = LsqStatus::Timeout;
      break;
    }
    if (r.cost == 0.0) {
      r.status = LsqStatus::ConvergedGtol;
      break;
    }
    if (r.iterations >= opts.max_iterations) {
      r.status = LsqStatus::MaxIterations;
      break;
    }
    problem.normal_model(r.x, f, g, b);
    ++r.iterations;
    if (g.lpNorm<Eigen::Infinity>() <= opts.gtol) {
      r.status = LsqStatus::ConvergedGtol;
      break;
    }

    // Inner loop: shrink the region until a step is accepted.
    for (;;) {
      const double xscale = opts.xtol * (opts.xtol + r.x.norm());
      if (radius <= xscale) {
        r.status = LsqStatus::ConvergedXtol;
        done = true;
        break;
      }
      const Vector p = solve_subproblem(b, g, radius);
      const double pnorm = p.norm();
      const Vector x_new = r.x + p;
      Vector f_new;
      bool ok = true;
      try {
        f_new = problem.residual(x_new);
        ok = finite(f_new);
      } catch (const EvaluationError&) {
        ok = false;
      }
      ++r.evaluations;
      if (!ok) {
        radius = 0.25 * std::min(radius, pnorm);
        continue;
      }
      const double cost_new = 0.5 * f_new.squaredNorm();
      const double predicted = -(g.dot(p) + 0.5 * p.dot(b * p));
      const double actual = r.cost - cost_new;
      const double rho = predicted > 0.0 ? actual / predicted : (actual > 0.0 ? 1.0 : -1.0);

      if (rho < 0.25) radius = 0.25 * pnorm;
      else if (rho > 0.75 && pnorm >= 0.9 * radius) radius = 2.0 * radius;

      if (rho > 1e-4 && actual > 0.0) {
        const double old_cost = r.cost;
        r.x = x_new;
        f = std::move(f_new);
        r.cost = cost_new;
        r.costs.push_back(r.cost);
        if (actual <= opts.ftol * old_cost) {
          r.status = LsqStatus::ConvergedFtol;
          done = true;
        } else if (pnorm <= xscale) {
          r.status = LsqStatus::ConvergedXtol;
          done = true;
        }
        break;
      }
      if (pnorm <= xscale) {
        r.status = LsqStatus::ConvergedXtol;
        done = true;
        break;
      }
    }
  }
  r.wall_time_s = elapsed();
  return r;
}

}  // namespace cklemap
