#pragma once

#include <memory>
#include <span>
#include <vector>

#include "cklemap/types.hpp"

namespace cklemap {

/// Root marker in elimination-tree parent arrays.
inline constexpr Index kNoParent = -1;

enum class Ordering { Natural, MinimumDegree };

/// Fill-reducing permutation: perm[k] is the original row placed at pivot k.
/// Ties are broken by lowest index, so the result is deterministic.
std::vector<Index> minimum_degree_ordering(const SparseMatrix& a);

/// Symbolic Cholesky analysis of C = P A P^T for a fixed sparsity pattern.
/// Holds the permutation, the elimination tree and the complete pattern of
/// L, so numeric factorizations of any matrix with the same pattern reuse it.
class SymbolicCholesky {
 public:
  /// `perm` empty means natural order.
  static std::shared_ptr<const SymbolicCholesky> analyze(const SparseMatrix& a,
                                                         std::span<const Index> perm = {});
  static std::shared_ptr<const SymbolicCholesky> analyze(const SparseMatrix& a, Ordering ordering);

  Index size() const { return n_; }
  Index nnz() const { return static_cast<Index>(row_idx_.size()); }
  std::span<const Index> perm() const { return perm_; }
  std::span<const Index> inverse_perm() const { return pinv_; }
  std::span<const Index> etree() const { return parent_; }
  std::span<const Index> col_ptr() const { return col_ptr_; }
  std::span<const Index> row_idx() const { return row_idx_; }

  /// True when `a` has exactly the pattern this analysis was built from.
  bool matches(const SparseMatrix& a) const;

 private:
  friend class CholeskyFactor;

  Index n_ = 0;
  std::vector<Index> perm_, pinv_, parent_;
  std::vector<Index> col_ptr_, row_idx_;
  // Upper triangle of C by column, with positions into A's value array.
  std::vector<Index> cup_ptr_, cup_row_, cup_src_;
  // Row patterns of L (strictly lower part), each in topological order.
  std::vector<Index> reach_ptr_, reach_;
  // Pattern of the analysed matrix, for matches().
  std::vector<int> a_outer_, a_inner_;
};

/// Numeric factor L with P A P^T = L L^T. L is stored by column with row
/// indices ascending and the diagonal first. Immutable once built.
class CholeskyFactor {
 public:
  /// Throws NotPositiveDefinite carrying the failing pivot.
  static CholeskyFactor factorize(const SparseMatrix& a,
                                  std::shared_ptr<const SymbolicCholesky> symbolic);

  Index size() const { return symbolic_->size(); }
  const SymbolicCholesky& symbolic() const { return *symbolic_; }
  std::shared_ptr<const SymbolicCholesky> symbolic_ptr() const { return symbolic_; }
  std::span<const Index> perm() const { return symbolic_->perm(); }
  std::span<const Index> inverse_perm() const { return symbolic_->inverse_perm(); }
  std::span<const Index> etree() const { return symbolic_->etree(); }
  std::span<const Index> col_ptr() const { return symbolic_->col_ptr(); }
  std::span<const Index> row_idx() const { return symbolic_->row_idx(); }
  std::span<const double> values() const { return values_; }

  double diagonal(Index j) const { return values_[symbolic_->col_ptr_[j]]; }
  /// L as an Eigen sparse matrix (copy), for inspection and tests.
  SparseMatrix lower() const;

  /// In-place L z = z and L^T z = z on vectors in factor (permuted) order.
  void forward_solve(std::span<double> z) const;
  void backward_solve(std::span<double> z) const;

 private:
  std::shared_ptr<const SymbolicCholesky> symbolic_;
  std::vector<double> values_;
};

/// Convenience: analyze + factorize.
CholeskyFactor factorize(const SparseMatrix& a, Ordering ordering = Ordering::Natural);
CholeskyFactor factorize(const SparseMatrix& a, std::span<const Index> perm);

/// Ascending vertex list of the closure of x in G(L), x in factor order.
using ClosureSet = std::vector<Index>;

/// Walks from x to the root of the elimination tree by repeatedly taking the
/// first sub-diagonal nonzero of the current column of L.
ClosureSet find_sparsity(const CholeskyFactor& factor, Index x);
ClosureSet find_sparsity(const SymbolicCholesky& symbolic, Index x);

/// z = L^{-1} e_x in factor order, touching only columns in the closure.
SparseVector partial_forward_solve(const CholeskyFactor& factor, Index x);
SparseVector partial_forward_solve(const CholeskyFactor& factor, Index x, const ClosureSet& closure);

/// W = A^{-1} H^T for observation rows `obs_indices` (original order): a
/// closure-restricted forward solve and a dense backward solve per column.
Matrix solve_columns(const CholeskyFactor& factor, std::span<const Index> obs_indices);
/// Same with closures precomputed by find_sparsity on pinv[obs_indices[k]].
Matrix solve_columns(const CholeskyFactor& factor, std::span<const Index> obs_indices,
                     std::span<const ClosureSet> closures);

/// x = A^{-1} rhs with full forward and backward substitution.
Vector full_solve(const CholeskyFactor& factor, const Vector& rhs);

}  // namespace cklemap
