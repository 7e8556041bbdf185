#include "cklemap/ckle.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "cklemap/error.hpp"

namespace cklemap {

EigenPairs eigendecompose(const Matrix& cov) {
  if (cov.rows() != cov.cols()) throw InvalidArgument("eigendecompose: matrix is not square");
  const Index n = cov.rows();
  if (n == 0) return {Vector(0), Matrix(0, 0)};
  if (!cov.allFinite()) throw InvalidArgument("eigendecompose: matrix has non-finite entries");
  const double scale = std::max(cov.cwiseAbs().maxCoeff(), 1.0);
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    std::ostringstream msg;
    msg << "eigendecompose: matrix is not symmetric (max |C - C^T| = " << asym << ")";
    throw InvalidArgument(msg.str());
  }

  // dsyevd reads the lower triangle and leaves ascending eigenvalues.
  Matrix a = cov;
  Vector w(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n), a.data(),
                                         static_cast<lapack_int>(n), w.data());
  if (info != 0) {
    std::ostringstream msg;
    msg << "eigendecompose: LAPACK dsyevd failed (info " << info << ")";
    throw Error(msg.str());
  }

  EigenPairs out;
  out.lambdas = w.reverse();
  out.vectors = a.rowwise().reverse();
  out.lambdas = out.lambdas.cwiseMax(0.0);
  return out;
}

double tail_ratio(const Vector& lambdas, Index n_keep) {
  const double total = lambdas.sum();
  if (!(total > 0.0)) throw InvalidArgument("tail_ratio: spectrum has no positive energy");
  n_keep = std::clamp<Index>(n_keep, 0, lambdas.size());
  return lambdas.tail(lambdas.size() - n_keep).sum() / total;
}

Index truncate(const EigenPairs& pairs, double rtol) {
  if (!(rtol >= 0.0 && rtol < 1.0)) throw InvalidArgument("truncate: rtol must lie in [0, 1)");
  const Vector& l = pairs.lambdas;
  const Index n = l.size();
  const double total = l.sum();
  if (!(total > 0.0)) throw InvalidArgument("truncate: all-zero spectrum");
  // Suffix sums, accumulated from the small end for accuracy.
  double tail = 0.0;
  Index keep = n;
  for (Index k = n; k >= 1; --k) {
    // tail currently holds sum of l[k..n-1]
    if (tail / total <= rtol) keep = k;
    else break;
    tail += l[k - 1];
  }
  return std::max<Index>(keep, 1);
}

Truncation BasisOptions::truncation() const {
  if (n_terms) return Truncation::terms(*n_terms);
  return {rtol, max_terms};
}

CkleBasis build_basis(const Field& mean, const EigenPairs& pairs, const Truncation& truncation) {
  const Index n = pairs.lambdas.size();
  if (mean.size() != n || pairs.vectors.rows() != n || pairs.vectors.cols() != n) {
    throw InvalidArgument("build_basis: mean and eigenpairs disagree in size");
  }
  Index keep = 0;
  if (truncation.n_terms) {
    if (*truncation.n_terms < 1) throw InvalidArgument("build_basis: number of terms must be positive");
    keep = std::min(*truncation.n_terms, n);
    if (truncation.rtol) keep = std::min(keep, truncate(pairs, *truncation.rtol));
  } else {
    keep = truncate(pairs, truncation.rtol.value_or(1e-8));
  }

  CkleBasis basis;
  basis.mean = mean;
  basis.lambdas_kept = pairs.lambdas.head(keep);
  basis.psi = pairs.vectors.leftCols(keep) * basis.lambdas_kept.cwiseSqrt().asDiagonal();
  basis.rtol_achieved = tail_ratio(pairs.lambdas, keep);
  return basis;
}

CkleBasis build_basis(const GpPosterior& post, const Truncation& truncation) {
  return build_basis(post.mean, eigendecompose(post.cov), truncation);
}

Field expand(const CkleBasis& basis, const Vector& xi) {
  if (xi.size() != basis.num_terms()) {
    std::ostringstream msg;
    msg << "expand: expected " << basis.num_terms() << " coefficients, got " << xi.size();
    throw InvalidArgument(msg.str());
  }
  return basis.mean + basis.psi * xi;
}

namespace {

void put(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  out << buf;
}

}  // namespace

void write_basis(std::ostream& out, const CkleBasis& basis) {
  const Index n = basis.num_cells();
  const Index k = basis.num_terms();
  out << n << ' ' << k << '\n';
  for (Index i = 0; i < n; ++i) {
    put(out, basis.mean[i]);
    out << '\n';
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < k; ++j) {
      if (j > 0) out << ' ';
      put(out, basis.psi(i, j));
    }
    out << '\n';
  }
}

CkleBasis read_basis(std::istream& in) {
  Index n = 0, k = 0;
  if (!(in >> n >> k) || n < 1 || k < 1 || k > n) throw ConfigError("basis file: bad header");
  CkleBasis basis;
  basis.mean.resize(n);
  basis.psi.resize(n, k);
  for (Index i = 0; i < n; ++i) {
    if (!(in >> basis.mean[i])) throw ConfigError("basis file: truncated mean block");
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < k; ++j) {
      if (!(in >> basis.psi(i, j))) throw ConfigError("basis file: truncated psi block");
    }
  }
  basis.lambdas_kept = basis.psi.colwise().squaredNorm().transpose();
  basis.rtol_achieved = std::nan("");
  return basis;
}

}  // namespace cklemap
