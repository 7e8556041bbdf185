#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "cklemap/ckle.hpp"
#include "cklemap/fvtpfa.hpp"
#include "cklemap/mesh.hpp"
#include "cklemap/trust_region.hpp"

namespace cklemap {

enum class Method { Map, Cklemap, CklemapAccel };

std::string_view to_string(Method method);
/// Accepts "map", "cklemap" and "cklemap-accel".
Method parse_method(std::string_view text);

struct InverseConfig {
  Method method = Method::CklemapAccel;
  double gamma = 1e-6;  // weight of the H1 (gradient) penalty
  TrustRegionOptions solver;

  void validate() const;
};

/// Regularized misfit of a steady Darcy model with unknown log-transmissivity
///   f = [u_s - H_u u(y); y_s - H_y y; sqrt(gamma) D y],  y = mean + T x
/// where T is the identity (MAP, x = y) or the CKLE basis (x = xi). The
/// penalty block is dropped when gamma = 0. The state Jacobian is assembled
/// as W^T S with W = A^{-1} H_u^T and S the residual sensitivities; the
/// accelerated path computes W from closure-restricted forward solves, the
/// naive path from full solves.
class FlowInverseProblem : public LeastSquaresProblem {
 public:
  /// MAP problem in the full field y.
  FlowInverseProblem(const Mesh& mesh, ObservationSet obs_u, ObservationSet obs_y, double gamma,
                     bool accelerated);
  /// CKLEMAP problem in the coefficients xi of `basis` (kept by reference).
  FlowInverseProblem(const Mesh& mesh, const CkleBasis& basis, ObservationSet obs_u, ObservationSet obs_y,
                     double gamma, bool accelerated);

  Index num_params() const;
  Index num_residuals() const;
  bool reduced() const { return basis_ != nullptr; }

  Field field(const Vector& x) const;
  /// Head at x (forward solve, cached for the most recent x).
  Field state(const Vector& x);

  Vector residual(const Vector& x) override;
  Matrix jacobian(const Vector& x) override;
  void normal_model(const Vector& x, const Vector& f, Vector& g, Matrix& b) override;

  /// d(u_s - H_u u)/dy at x, of shape n_u x N.
  Matrix state_jacobian(const Vector& x);

 private:
  const ForwardSolver::Solution& solve_at(const Vector& x);
  Matrix observation_solves(const CholeskyFactor& factor) const;
  /// Rows of f after the state block, as a sparse operator on y.
  Vector constant_residual(const Field& y) const;

  const Mesh* mesh_;
  const CkleBasis* basis_ = nullptr;
  ObservationSet obs_u_, obs_y_;
  double gamma_;
  bool accelerated_;
  ForwardSolver forward_;
  std::vector<ClosureSet> closures_;
  SparseMatrix h_y_;     // n_y x N
  SparseMatrix grad_;    // F x N
  SparseMatrix lower_;   // [-H_y; sqrt(gamma) D]
  Matrix lower_normal_;  // T^T lower^T lower T, cached
  std::optional<Vector> cached_x_;
  std::optional<ForwardSolver::Solution> cached_;
};

Vector residual_map(const Mesh& mesh, const ObservationSet& obs_u, const ObservationSet& obs_y, double gamma,
                    const Field& y);
Matrix jacobian_map(const Mesh& mesh, const ObservationSet& obs_u, const ObservationSet& obs_y, double gamma,
                    const Field& y, bool accelerated = true);
Vector residual_cklemap(const Mesh& mesh, const CkleBasis& basis, const ObservationSet& obs_u,
                        const ObservationSet& obs_y, double gamma, const Vector& xi);
Matrix jacobian_cklemap(const Mesh& mesh, const CkleBasis& basis, const ObservationSet& obs_u,
                        const ObservationSet& obs_y, double gamma, const Vector& xi, bool accelerated = true);

struct ErrorMetrics {
  double rel_l2 = 0.0;    // |y_hat - y_ref|_2 / |y_ref|_2
  double abs_linf = 0.0;  // |y_hat - y_ref|_inf
};

/// Throws InvalidArgument for mismatched lengths or a zero reference.
ErrorMetrics error_metrics(const Field& y_hat, const Field& y_ref);

struct InversionReport {
  Method method = Method::CklemapAccel;
  double gamma = 0.0;
  Index num_params = 0;  // N for MAP, N_y for CKLEMAP
  double rtol_achieved = 0.0;
  Field y_hat, u_hat;
  Vector x_hat;
  std::optional<ErrorMetrics> errors;
  LsqResult lsq;
  double wall_time_s = 0.0;  // problem setup and optimization
};

/// Runs the configured method. MAP starts from `prior_mean` (falling back to
/// the basis mean), CKLEMAP from xi = 0. A basis is required for CKLEMAP.
InversionReport invert(const InverseConfig& config, const Mesh& mesh, const ObservationSet& obs_u,
                       const ObservationSet& obs_y, const CkleBasis* basis, const Field* prior_mean = nullptr,
                       const Field* reference = nullptr);

}  // namespace cklemap
