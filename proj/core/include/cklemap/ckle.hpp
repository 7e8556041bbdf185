#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "cklemap/gpr.hpp"
#include "cklemap/types.hpp"

namespace cklemap {

/// Eigenpairs of a symmetric matrix, eigenvalues nonincreasing. Columns of
/// `vectors` are orthonormal.
struct EigenPairs {
  Vector lambdas;
  Matrix vectors;
};

/// Full symmetric eigendecomposition. Negative eigenvalues (round-off on a
/// PSD input) are clamped to zero. Throws InvalidArgument when `cov` is not
/// square or not symmetric within 1e-10 (relative to its largest entry).
EigenPairs eigendecompose(const Matrix& cov);

/// Smallest N_y whose discarded tail carries at most `rtol` of the total
/// eigenvalue energy. Throws InvalidArgument for rtol outside [0, 1) or an
/// all-zero spectrum.
Index truncate(const EigenPairs& pairs, double rtol);

/// Tail-energy ratio sum_{i >= n_keep} lambda_i / sum_i lambda_i.
double tail_ratio(const Vector& lambdas, Index n_keep);

/// Either a tolerance or an explicit number of terms (capped at N).
struct Truncation {
  std::optional<double> rtol;
  std::optional<Index> n_terms;

  static Truncation tolerance(double r) { return {r, std::nullopt}; }
  static Truncation terms(Index n) { return {std::nullopt, n}; }
};

/// Basis size policy: an explicit number of terms when given, otherwise the
/// rtol truncation capped at max_terms.
struct BasisOptions {
  double rtol = 1e-8;
  Index max_terms = 1000;
  std::optional<Index> n_terms;

  Truncation truncation() const;
};

struct CkleBasis {
  Field mean;
  Matrix psi;  // N x N_y, column j = sqrt(lambda_j) phi_j
  Vector lambdas_kept;
  double rtol_achieved = 0.0;

  Index num_cells() const { return mean.size(); }
  Index num_terms() const { return psi.cols(); }
};

CkleBasis build_basis(const GpPosterior& post, const Truncation& truncation);
/// Same from a precomputed decomposition of post.cov.
CkleBasis build_basis(const Field& mean, const EigenPairs& pairs, const Truncation& truncation);

/// mean + psi * xi.
Field expand(const CkleBasis& basis, const Vector& xi);

/// Text format: `N N_y`, then N mean values, then N rows of N_y values.
void write_basis(std::ostream& out, const CkleBasis& basis);
CkleBasis read_basis(std::istream& in);

}  // namespace cklemap
