#include "cklemap/fvtpfa.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "cklemap/error.hpp"

namespace cklemap {

namespace {

double checked_exp(double y) {
  const double t = std::exp(y);
  if (!std::isfinite(t) || !(t > 0.0)) {
    std::ostringstream msg;
    msg << "transmissivity exp(" << y << ") is not a finite positive number";
    throw InvalidParameter(msg.str());
  }
  return t;
}

// d t_f / d y_p for the harmonic-mean face between p and q, given t_f.
double face_derivative(double t, double y_p, double y_q) { return t / (1.0 + std::exp(y_p - y_q)); }

double dirichlet_transmissibility(const BoundaryFace& face, double y) {
  return face.length / face.half_distance * checked_exp(y);
}

void check_field(const Mesh& mesh, const Field& v, const char* name) {
  if (v.size() != mesh.num_cells()) {
    std::ostringstream msg;
    msg << name << " has " << v.size() << " entries, mesh has " << mesh.num_cells() << " cells";
    throw InvalidArgument(msg.str());
  }
  if (!v.allFinite()) throw InvalidParameter(std::string(name) + " has non-finite entries");
}

}  // namespace

double face_transmissibility(double y_i, double y_j, double length, double distance) {
  if (!std::isfinite(y_i) || !std::isfinite(y_j)) {
    throw InvalidParameter("face_transmissibility: non-finite log-transmissivity");
  }
  const double a = checked_exp(y_i);
  const double b = checked_exp(y_j);
  // 2ab / (a + b), arranged so that the product never overflows.
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const double t = length / distance * (2.0 * lo / (1.0 + lo / hi));
  if (!std::isfinite(t) || !(t > 0.0)) {
    throw InvalidParameter("face_transmissibility: transmissibility is not finite and positive");
  }
  return t;
}

FvSystem assemble(const Mesh& mesh, const Field& y) {
  check_field(mesh, y, "log-transmissivity");
  if (!mesh.has_dirichlet()) {
    throw SingularSystem("assemble: mesh has no Dirichlet face, A would be singular");
  }
  const Index n = mesh.num_cells();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n + 4 * mesh.interior_faces().size());
  FvSystem sys;
  sys.b = Vector::Zero(n);
  Vector diag = Vector::Zero(n);

  for (const auto& f : mesh.interior_faces()) {
    const double t = face_transmissibility(y[f.lo], y[f.hi], f.length, f.distance);
    diag[f.lo] += t;
    diag[f.hi] += t;
    triplets.emplace_back(static_cast<int>(f.lo), static_cast<int>(f.hi), -t);
    triplets.emplace_back(static_cast<int>(f.hi), static_cast<int>(f.lo), -t);
  }
  for (const auto& f : mesh.boundary_faces()) {
    if (f.bc.kind == BcKind::Dirichlet) {
      const double t = dirichlet_transmissibility(f, y[f.cell]);
      diag[f.cell] += t;
      sys.b[f.cell] += t * f.bc.value;
    } else {
      // Outward flux q_N leaves the cell: it appears as -q_N |f| on the right.
      sys.b[f.cell] -= f.bc.value * f.length;
    }
  }
  for (Index c = 0; c < n; ++c) triplets.emplace_back(static_cast<int>(c), static_cast<int>(c), diag[c]);

  sys.a.resize(n, n);
  sys.a.setFromTriplets(triplets.begin(), triplets.end());
  sys.a.makeCompressed();
  return sys;
}

Vector residual(const FvSystem& system, const Field& u) {
  if (u.size() != system.b.size()) throw InvalidArgument("residual: u has the wrong length");
  return system.a * u - system.b;
}

namespace {

Field solve_with(const FvSystem& system, const std::shared_ptr<const SymbolicCholesky>& symbolic,
                 CholeskyFactor* factor_out) {
  try {
    auto factor = CholeskyFactor::factorize(system.a, symbolic);
    Field u = full_solve(factor, system.b);
    if (factor_out != nullptr) *factor_out = std::move(factor);
    return u;
  } catch (const NotPositiveDefinite& e) {
    const Index cell = symbolic->perm()[e.pivot()];
    std::ostringstream msg;
    msg << "forward solve failed: stiffness matrix not positive definite at cell " << cell;
    throw NotPositiveDefinite(msg.str(), e.pivot());
  }
}

}  // namespace

Field solve_forward(const FvSystem& system) {
  return solve_with(system, SymbolicCholesky::analyze(system.a, Ordering::Natural), nullptr);
}

ForwardSolver::ForwardSolver(const Mesh& mesh, Ordering ordering) : mesh_(&mesh) {
  const FvSystem reference = assemble(mesh, Field::Zero(mesh.num_cells()));
  symbolic_ = SymbolicCholesky::analyze(reference.a, ordering);
}

ForwardSolver::Solution ForwardSolver::solve(const Field& y) const {
  Solution s{assemble(*mesh_, y), CholeskyFactor{}, Field{}};
  s.u = solve_with(s.system, symbolic_, &s.factor);
  return s;
}

SparseVector residual_sensitivity(const Mesh& mesh, const Field& y, const Field& u, Index p) {
  if (p < 0 || p >= mesh.num_cells()) throw InvalidArgument("residual_sensitivity: cell out of range");
  check_field(mesh, y, "log-transmissivity");
  check_field(mesh, u, "head");

  std::vector<std::pair<Index, double>> entries;
  double self = 0.0;
  const auto faces = mesh.interior_faces();
  for (const Index fi : mesh.cell_interior_faces(p)) {
    const auto& f = faces[fi];
    const Index q = f.lo == p ? f.hi : f.lo;
    const double t = face_transmissibility(y[p], y[q], f.length, f.distance);
    const double flux = face_derivative(t, y[p], y[q]) * (u[p] - u[q]);
    self += flux;
    entries.emplace_back(q, -flux);
  }
  const auto bfaces = mesh.boundary_faces();
  for (const Index fi : mesh.cell_boundary_faces(p)) {
    const auto& f = bfaces[fi];
    if (f.bc.kind != BcKind::Dirichlet) continue;
    self += dirichlet_transmissibility(f, y[p]) * (u[p] - f.bc.value);
  }
  entries.emplace_back(p, self);
  std::sort(entries.begin(), entries.end());

  SparseVector s(mesh.num_cells());
  s.reserve(static_cast<Index>(entries.size()));
  for (const auto& [i, v] : entries) s.insertBack(static_cast<int>(i)) = v;
  return s;
}

SparseMatrix residual_sensitivity_matrix(const Mesh& mesh, const Field& y, const Field& u) {
  check_field(mesh, y, "log-transmissivity");
  check_field(mesh, u, "head");
  const Index n = mesh.num_cells();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n + 4 * mesh.interior_faces().size());
  for (const auto& f : mesh.interior_faces()) {
    const double t = face_transmissibility(y[f.lo], y[f.hi], f.length, f.distance);
    const double du = u[f.lo] - u[f.hi];
    const double flux_lo = face_derivative(t, y[f.lo], y[f.hi]) * du;
    const double flux_hi = -face_derivative(t, y[f.hi], y[f.lo]) * du;
    const int lo = static_cast<int>(f.lo);
    const int hi = static_cast<int>(f.hi);
    triplets.emplace_back(lo, lo, flux_lo);
    triplets.emplace_back(hi, lo, -flux_lo);
    triplets.emplace_back(hi, hi, flux_hi);
    triplets.emplace_back(lo, hi, -flux_hi);
  }
  for (const auto& f : mesh.boundary_faces()) {
    if (f.bc.kind != BcKind::Dirichlet) continue;
    const int c = static_cast<int>(f.cell);
    triplets.emplace_back(c, c, dirichlet_transmissibility(f, y[f.cell]) * (u[f.cell] - f.bc.value));
  }
  SparseMatrix s(n, n);
  s.setFromTriplets(triplets.begin(), triplets.end());
  s.makeCompressed();
  return s;
}

}  // namespace cklemap
