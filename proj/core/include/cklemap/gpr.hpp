#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cklemap/mesh.hpp"
#include "cklemap/types.hpp"

namespace cklemap {

/// Matérn 5/2 hyperparameters. `length` is the correlation length; `nugget`
/// is a variance added on the diagonal for numerical stability.
struct KernelParams {
  double sigma = 1.0;
  double length = 1.0;
  double nugget = 0.0;

  /// Throws InvalidArgument unless sigma > 0, length > 0 and nugget >= 0.
  void validate() const;
};

/// sigma^2 (1 + sqrt(5) r/l + 5 r^2 / (3 l^2)) exp(-sqrt(5) r/l), plus the
/// nugget when evaluating a point against itself.
double matern52(double r, const KernelParams& params, bool same_point = false);

/// Covariance between point sets; the nugget is added on the diagonal only
/// when `same_points` is set (a point with itself).
Matrix covariance(std::span<const Point> a, std::span<const Point> b, const KernelParams& params,
                  bool same_points);

/// Negative log marginal likelihood of zero-mean GP data. Returns +infinity
/// when the training covariance cannot be Cholesky-factorized.
double neg_log_marginal_likelihood(const KernelParams& params, std::span<const Point> x,
                                   const Vector& y);

struct FitOptions {
  /// Nugget as a fraction of the sample variance of the training values.
  double nugget_relative = 1e-8;
  /// Absolute nugget; overrides nugget_relative when >= 0.
  double nugget_absolute = -1.0;
  int grid_size = 4;            // starts per axis
  int max_evaluations = 400;    // per Nelder-Mead run
  double tolerance = 1e-8;      // simplex spread in log space
};

enum class FitStatus { Ok, Degenerate };

struct FitResult {
  KernelParams params;
  double nlml = 0.0;
  FitStatus status = FitStatus::Ok;
  /// Search box in (sigma, length), reported for diagnostics.
  double sigma_min = 0.0, sigma_max = 0.0, length_min = 0.0, length_max = 0.0;
  /// NLML at every start point, in start-grid order.
  std::vector<double> start_nlml;
};

/// Multi-start Nelder-Mead on (log sigma, log length) with the nugget held
/// fixed. The box is derived from the data: sigma in [1e-2, 1e1] x RMS(y),
/// length in [0.1 x shortest, 10 x longest] pairwise distance. Starts are a
/// grid_size x grid_size log grid on [1/4, 4] x RMS and [shortest, longest].
/// Data with zero sample variance returns the sigma floor, the length upper
/// bound and FitStatus::Degenerate.
FitResult fit_hyperparameters(std::span<const Point> x, const Vector& y, const FitOptions& opts = {});

/// Conditional (kriging) mean and covariance at every cell centre.
struct GpPosterior {
  Field mean;
  Matrix cov;
  KernelParams params;
  ObservationSet train;
};

/// One Cholesky of the training covariance serves both the mean and the
/// covariance. Throws InvalidArgument for empty training data and
/// NotPositiveDefinite when the training covariance is singular.
GpPosterior condition(const KernelParams& params, const ObservationSet& train, const Mesh& mesh);

/// Cell centres at the given indices.
std::vector<Point> gather_points(const Mesh& mesh, std::span<const Index> indices);

}  // namespace cklemap
