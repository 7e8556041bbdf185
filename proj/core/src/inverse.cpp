#include "cklemap/inverse.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "cklemap/error.hpp"
#include "cklemap/parallel.hpp"

namespace cklemap {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Map: return "map";
    case Method::Cklemap: return "cklemap";
    case Method::CklemapAccel: return "cklemap-accel";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text == "map") return Method::Map;
  if (text == "cklemap") return Method::Cklemap;
  if (text == "cklemap-accel") return Method::CklemapAccel;
  throw InvalidArgument("unknown method '" + std::string(text) + "' (expected map, cklemap or cklemap-accel)");
}

void InverseConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be a finite value >= 0");
  if (!(solver.ftol > 0.0 && solver.gtol > 0.0 && solver.xtol > 0.0)) {
    throw InvalidArgument("solver tolerances must be positive");
  }
  if (solver.max_iterations < 0) throw InvalidArgument("max_iterations must be >= 0");
}

namespace {

void check_observations(const Mesh& mesh, const ObservationSet& obs_u, const ObservationSet& obs_y) {
  obs_u.check_bounds(mesh.num_cells());
  obs_y.check_bounds(mesh.num_cells());
}

std::string describe(const Vector& x) {
  std::ostringstream out;
  out << "x (" << x.size() << " entries) = [";
  for (Index i = 0; i < std::min<Index>(x.size(), 6); ++i) out << (i ? ", " : "") << x[i];
  if (x.size() > 6) out << ", ...";
  out << "], |x| = " << x.norm();
  return out.str();
}

}  // namespace

FlowInverseProblem::FlowInverseProblem(const Mesh& mesh, ObservationSet obs_u, ObservationSet obs_y, double gamma,
                                       bool accelerated)
    : mesh_(&mesh),
      obs_u_(std::move(obs_u)),
      obs_y_(std::move(obs_y)),
      gamma_(gamma),
      accelerated_(accelerated),
      forward_(mesh) {
  if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be >= 0");
  check_observations(mesh, obs_u_, obs_y_);
  const Index n = mesh.num_cells();
  h_y_ = observation_matrix(obs_y_.indices(), n);
  grad_ = gradient_operator(mesh);

  const Index ny = obs_y_.size();
  const Index nf = gamma_ > 0.0 ? grad_.rows() : 0;
  lower_.resize(ny + nf, n);
  std::vector<Eigen::Triplet<double>> t;
  for (Index k = 0; k < ny; ++k) t.emplace_back(static_cast<int>(k), static_cast<int>(obs_y_.indices()[k]), -1.0);
  if (nf > 0) {
    const double w = std::sqrt(gamma_);
    for (int c = 0; c < grad_.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(grad_, c); it; ++it) {
        t.emplace_back(static_cast<int>(ny + it.row()), c, w * it.value());
      }
    }
  }
  lower_.setFromTriplets(t.begin(), t.end());
  lower_.makeCompressed();

  if (accelerated_) {
    // Closures depend only on the pattern of A, fixed by the mesh.
    const auto& symbolic = *forward_.symbolic();
    closures_.reserve(obs_u_.indices().size());
    for (const Index i : obs_u_.indices()) closures_.push_back(find_sparsity(symbolic, symbolic.inverse_perm()[i]));
  }
}

FlowInverseProblem::FlowInverseProblem(const Mesh& mesh, const CkleBasis& basis, ObservationSet obs_u,
                                       ObservationSet obs_y, double gamma, bool accelerated)
    : FlowInverseProblem(mesh, std::move(obs_u), std::move(obs_y), gamma, accelerated) {
  if (basis.num_cells() != mesh.num_cells()) {
    std::ostringstream msg;
    msg << "basis has " << basis.num_cells() << " cells, mesh has " << mesh.num_cells();
    throw InvalidArgument(msg.str());
  }
  basis_ = &basis;
}

Index FlowInverseProblem::num_params() const { return basis_ ? basis_->num_terms() : mesh_->num_cells(); }

Index FlowInverseProblem::num_residuals() const { return obs_u_.size() + lower_.rows(); }

Field FlowInverseProblem::field(const Vector& x) const {
  if (x.size() != num_params()) {
    std::ostringstream msg;
    msg << "expected " << num_params() << " parameters, got " << x.size();
    throw InvalidArgument(msg.str());
  }
  return basis_ ? expand(*basis_, x) : Field(x);
}

const ForwardSolver::Solution& FlowInverseProblem::solve_at(const Vector& x) {
  if (cached_x_ && cached_x_->size() == x.size() && *cached_x_ == x) return *cached_;
  const Field y = field(x);
  cached_x_.reset();
  try {
    cached_ = forward_.solve(y);
  } catch (const EvaluationError& e) {
    throw EvaluationError(std::string(e.what()) + " at " + describe(x));
  }
  cached_x_ = x;
  return *cached_;
}

Field FlowInverseProblem::state(const Vector& x) { return solve_at(x).u; }

Vector FlowInverseProblem::constant_residual(const Field& y) const {
  Vector r = lower_ * y;
  r.head(obs_y_.size()) += obs_y_.values();
  return r;
}

Vector FlowInverseProblem::residual(const Vector& x) {
  const auto& sol = solve_at(x);
  Vector f(num_residuals());
  const Index nu = obs_u_.size();
  for (Index k = 0; k < nu; ++k) f[k] = obs_u_.values()[k] - sol.u[obs_u_.indices()[k]];
  f.tail(lower_.rows()) = constant_residual(field(x));
  return f;
}

Matrix FlowInverseProblem::observation_solves(const CholeskyFactor& factor) const {
  if (accelerated_) return solve_columns(factor, obs_u_.indices(), closures_);
  const Index n = factor.size();
  const auto idx = obs_u_.indices();
  Matrix w(n, static_cast<Index>(idx.size()));
  parallel_for(idx.size(), [&](std::size_t k) {
    Vector e = Vector::Zero(n);
    e[idx[k]] = 1.0;
    w.col(static_cast<Index>(k)) = full_solve(factor, e);
  });
  return w;
}

Matrix FlowInverseProblem::state_jacobian(const Vector& x) {
  const auto& sol = solve_at(x);
  const Field y = field(x);
  const Matrix w = observation_solves(sol.factor);
  const SparseMatrix s = residual_sensitivity_matrix(*mesh_, y, sol.u);
  // f_u = u_s - H_u A^{-1} b, so df_u/dy_p = H_u A^{-1} s_p = W^T s_p.
  return (s.transpose() * w).transpose();
}

Matrix FlowInverseProblem::jacobian(const Vector& x) {
  const Index nu = obs_u_.size();
  Matrix j(num_residuals(), num_params());
  const Matrix ju = state_jacobian(x);
  if (basis_) {
    j.topRows(nu).noalias() = ju * basis_->psi;
    j.bottomRows(lower_.rows()).noalias() = lower_ * basis_->psi;
  } else {
    j.topRows(nu) = ju;
    j.bottomRows(lower_.rows()) = Matrix(lower_);
  }
  return j;
}

void FlowInverseProblem::normal_model(const Vector& x, const Vector& f, Vector& g, Matrix& b) {
  const Index nu = obs_u_.size();
  if (lower_normal_.size() == 0) {
    const SparseMatrix m = SparseMatrix(lower_.transpose()) * lower_;
    if (basis_) {
      const Matrix mp = m * basis_->psi;
      lower_normal_.noalias() = basis_->psi.transpose() * mp;
    } else {
      lower_normal_ = Matrix(m);
    }
  }
  Matrix ju = state_jacobian(x);
  if (basis_) ju = ju * basis_->psi;
  const Vector lower_g = lower_.transpose() * f.tail(lower_.rows());
  g.noalias() = ju.transpose() * f.head(nu);
  if (basis_) g.noalias() += basis_->psi.transpose() * lower_g;
  else g += lower_g;
  b = lower_normal_;
  b.selfadjointView<Eigen::Lower>().rankUpdate(ju.transpose());
  b.triangularView<Eigen::StrictlyUpper>() = b.transpose();
}

Vector residual_map(const Mesh& mesh, const ObservationSet& obs_u, const ObservationSet& obs_y, double gamma,
                    const Field& y) {
  FlowInverseProblem p(mesh, obs_u, obs_y, gamma, true);
  return p.residual(y);
}

Matrix jacobian_map(const Mesh& mesh, const ObservationSet& obs_u, const ObservationSet& obs_y, double gamma,
                    const Field& y, bool accelerated) {
  FlowInverseProblem p(mesh, obs_u, obs_y, gamma, accelerated);
  return p.jacobian(y);
}

Vector residual_cklemap(const Mesh& mesh, const CkleBasis& basis, const ObservationSet& obs_u,
                        const ObservationSet& obs_y, double gamma, const Vector& xi) {
  FlowInverseProblem p(mesh, basis, obs_u, obs_y, gamma, true);
  return p.residual(xi);
}

Matrix jacobian_cklemap(const Mesh& mesh, const CkleBasis& basis, const ObservationSet& obs_u,
                        const ObservationSet& obs_y, double gamma, const Vector& xi, bool accelerated) {
  FlowInverseProblem p(mesh, basis, obs_u, obs_y, gamma, accelerated);
  return p.jacobian(xi);
}

ErrorMetrics error_metrics(const Field& y_hat, const Field& y_ref) {
  if (y_hat.size() != y_ref.size()) throw InvalidArgument("error_metrics: fields differ in length");
  const double ref = y_ref.norm();
  if (!(ref > 0.0)) throw InvalidArgument("error_metrics: reference field has zero norm");
  const Vector d = y_hat - y_ref;
  return {d.norm() / ref, d.size() ? d.lpNorm<Eigen::Infinity>() : 0.0};
}

InversionReport invert(const InverseConfig& config, const Mesh& mesh, const ObservationSet& obs_u,
                       const ObservationSet& obs_y, const CkleBasis* basis, const Field* prior_mean,
                       const Field* reference) {
  config.validate();
  const bool reduced = config.method != Method::Map;
  if (reduced && basis == nullptr) throw InvalidArgument("CKLEMAP inversion requires a basis");
  if (reference && reference->size() != mesh.num_cells()) {
    throw InvalidArgument("reference field does not match the mesh");
  }

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const bool accelerated = config.method == Method::CklemapAccel;

  InversionReport report;
  report.method = config.method;
  report.gamma = config.gamma;
  Vector x0;
  std::optional<FlowInverseProblem> problem;
  if (reduced) {
    problem.emplace(mesh, *basis, obs_u, obs_y, config.gamma, accelerated);
    x0 = Vector::Zero(basis->num_terms());
    report.rtol_achieved = basis->rtol_achieved;
  } else {
    problem.emplace(mesh, obs_u, obs_y, config.gamma, true);
    if (prior_mean) x0 = *prior_mean;
    else if (basis) x0 = basis->mean;
    else throw InvalidArgument("MAP inversion requires a prior mean or a basis");
    if (x0.size() != mesh.num_cells()) throw InvalidArgument("prior mean does not match the mesh");
    report.rtol_achieved = 0.0;
  }
  report.num_params = problem->num_params();

  report.lsq = trust_region_lsq(*problem, x0, config.solver);
  report.x_hat = report.lsq.x;
  report.y_hat = problem->field(report.x_hat);
  report.u_hat = problem->state(report.x_hat);
  report.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
  if (reference) report.errors = error_metrics(report.y_hat, *reference);
  return report;
}

}  // namespace cklemap
