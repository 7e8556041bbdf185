#include "cklemap/sparse_cholesky.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cklemap/error.hpp"
#include "cklemap/parallel.hpp"

namespace cklemap {

namespace {

std::vector<Index> checked_permutation(std::span<const Index> perm, Index n) {
  std::vector<Index> p(n);
  if (perm.empty()) {
    std::iota(p.begin(), p.end(), Index{0});
    return p;
  }
  if (static_cast<Index>(perm.size()) != n) {
    throw InvalidArgument("cholesky: permutation length differs from matrix size");
  }
  std::vector<char> seen(n, 0);
  for (Index k = 0; k < n; ++k) {
    const Index v = perm[k];
    if (v < 0 || v >= n || seen[v]) throw InvalidArgument("cholesky: invalid permutation");
    seen[v] = 1;
    p[k] = v;
  }
  return p;
}

}  // namespace

std::shared_ptr<const SymbolicCholesky> SymbolicCholesky::analyze(const SparseMatrix& a_in,
                                                                  Ordering ordering) {
  if (ordering == Ordering::MinimumDegree) {
    const auto perm = minimum_degree_ordering(a_in);
    return analyze(a_in, perm);
  }
  return analyze(a_in, std::span<const Index>{});
}

std::shared_ptr<const SymbolicCholesky> SymbolicCholesky::analyze(const SparseMatrix& a_in,
                                                                  std::span<const Index> perm) {
  if (a_in.rows() != a_in.cols()) throw InvalidArgument("cholesky: matrix must be square");
  SparseMatrix a = a_in;
  a.makeCompressed();
  const Index n = a.rows();

  auto sym = std::make_shared<SymbolicCholesky>();
  sym->n_ = n;
  sym->perm_ = checked_permutation(perm, n);
  sym->pinv_.resize(n);
  for (Index k = 0; k < n; ++k) sym->pinv_[sym->perm_[k]] = k;
  sym->a_outer_.assign(a.outerIndexPtr(), a.outerIndexPtr() + n + 1);
  sym->a_inner_.assign(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros());

  // Upper triangle of C = P A P^T, column k drawn from column perm[k] of A.
  sym->cup_ptr_.assign(n + 1, 0);
  std::vector<std::pair<Index, Index>> column;
  for (Index k = 0; k < n; ++k) {
    column.clear();
    const Index old = sym->perm_[k];
    for (int p = a.outerIndexPtr()[old]; p < a.outerIndexPtr()[old + 1]; ++p) {
      const Index i = sym->pinv_[a.innerIndexPtr()[p]];
      if (i <= k) column.emplace_back(i, p);
    }
    std::sort(column.begin(), column.end());
    for (const auto& [i, p] : column) {
      sym->cup_row_.push_back(i);
      sym->cup_src_.push_back(p);
    }
    sym->cup_ptr_[k + 1] = static_cast<Index>(sym->cup_row_.size());
  }

  // Elimination tree with path compression.
  sym->parent_.assign(n, kNoParent);
  {
    std::vector<Index> ancestor(n, kNoParent);
    for (Index k = 0; k < n; ++k) {
      for (Index p = sym->cup_ptr_[k]; p < sym->cup_ptr_[k + 1]; ++p) {
        Index i = sym->cup_row_[p];
        while (i != kNoParent && i < k) {
          const Index next = ancestor[i];
          ancestor[i] = k;
          if (next == kNoParent) sym->parent_[i] = k;
          i = next;
        }
      }
    }
  }

  // Row patterns of L: the reach of column k of C in the etree, emitted in
  // topological order (descendants before ancestors).
  std::vector<Index> counts(n, 1);
  sym->reach_ptr_.assign(n + 1, 0);
  {
    std::vector<Index> flag(n, kNoParent);
    std::vector<Index> stack(n);
    for (Index k = 0; k < n; ++k) {
      Index top = n;
      flag[k] = k;
      for (Index p = sym->cup_ptr_[k]; p < sym->cup_ptr_[k + 1]; ++p) {
        Index i = sym->cup_row_[p];
        if (i >= k) continue;
        Index len = 0;
        for (; flag[i] != k; i = sym->parent_[i]) {
          stack[len++] = i;
          flag[i] = k;
        }
        while (len > 0) stack[--top] = stack[--len];
      }
      for (Index t = top; t < n; ++t) {
        sym->reach_.push_back(stack[t]);
        ++counts[stack[t]];
      }
      sym->reach_ptr_[k + 1] = static_cast<Index>(sym->reach_.size());
    }
  }

  sym->col_ptr_.assign(n + 1, 0);
  for (Index j = 0; j < n; ++j) sym->col_ptr_[j + 1] = sym->col_ptr_[j] + counts[j];
  sym->row_idx_.resize(sym->col_ptr_[n]);
  {
    std::vector<Index> next(n);
    for (Index j = 0; j < n; ++j) {
      sym->row_idx_[sym->col_ptr_[j]] = j;
      next[j] = sym->col_ptr_[j] + 1;
    }
    for (Index k = 0; k < n; ++k) {
      for (Index t = sym->reach_ptr_[k]; t < sym->reach_ptr_[k + 1]; ++t) {
        const Index i = sym->reach_[t];
        sym->row_idx_[next[i]++] = k;
      }
    }
  }
  return sym;
}

bool SymbolicCholesky::matches(const SparseMatrix& a_in) const {
  if (a_in.rows() != n_ || a_in.cols() != n_) return false;
  SparseMatrix a = a_in;
  a.makeCompressed();
  return std::equal(a_outer_.begin(), a_outer_.end(), a.outerIndexPtr()) &&
         static_cast<std::size_t>(a.nonZeros()) == a_inner_.size() &&
         std::equal(a_inner_.begin(), a_inner_.end(), a.innerIndexPtr());
}

CholeskyFactor CholeskyFactor::factorize(const SparseMatrix& a_in,
                                         std::shared_ptr<const SymbolicCholesky> symbolic) {
  if (!symbolic) throw InvalidArgument("cholesky: missing symbolic analysis");
  const SymbolicCholesky& sym = *symbolic;
  if (!sym.matches(a_in)) {
    throw InvalidArgument("cholesky: matrix pattern differs from the symbolic analysis");
  }
  SparseMatrix compressed;
  const SparseMatrix* a = &a_in;
  if (!a_in.isCompressed()) {
    compressed = a_in;
    compressed.makeCompressed();
    a = &compressed;
  }
  const double* avals = a->valuePtr();
  const Index n = sym.n_;

  CholeskyFactor f;
  f.symbolic_ = std::move(symbolic);
  f.values_.assign(sym.row_idx_.size(), 0.0);
  auto& lx = f.values_;
  const auto& lp = sym.col_ptr_;
  const auto& li = sym.row_idx_;

  std::vector<double> x(n, 0.0);
  std::vector<Index> next(n);
  for (Index k = 0; k < n; ++k) {
    for (Index p = sym.cup_ptr_[k]; p < sym.cup_ptr_[k + 1]; ++p) {
      x[sym.cup_row_[p]] = avals[sym.cup_src_[p]];
    }
    double d = x[k];
    x[k] = 0.0;
    for (Index t = sym.reach_ptr_[k]; t < sym.reach_ptr_[k + 1]; ++t) {
      const Index i = sym.reach_[t];
      const double lki = x[i] / lx[lp[i]];
      x[i] = 0.0;
      for (Index p = lp[i] + 1; p < next[i]; ++p) x[li[p]] -= lx[p] * lki;
      d -= lki * lki;
      lx[next[i]++] = lki;
    }
    if (!(d > 0.0) || !std::isfinite(d)) {
      std::ostringstream msg;
      msg << "cholesky: matrix is not positive definite (pivot " << k << ", original row "
          << sym.perm_[k] << ", value " << d << ")";
      throw NotPositiveDefinite(msg.str(), k);
    }
    lx[lp[k]] = std::sqrt(d);
    next[k] = lp[k] + 1;
  }
  return f;
}

SparseMatrix CholeskyFactor::lower() const {
  const Index n = size();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(values_.size());
  const auto lp = col_ptr();
  const auto li = row_idx();
  for (Index j = 0; j < n; ++j) {
    for (Index p = lp[j]; p < lp[j + 1]; ++p) {
      triplets.emplace_back(static_cast<int>(li[p]), static_cast<int>(j), values_[p]);
    }
  }
  SparseMatrix l(n, n);
  l.setFromTriplets(triplets.begin(), triplets.end());
  return l;
}

void CholeskyFactor::forward_solve(std::span<double> z) const {
  const Index n = size();
  const auto lp = col_ptr();
  const auto li = row_idx();
  for (Index j = 0; j < n; ++j) {
    const double zj = z[j] / values_[lp[j]];
    z[j] = zj;
    for (Index p = lp[j] + 1; p < lp[j + 1]; ++p) z[li[p]] -= values_[p] * zj;
  }
}

void CholeskyFactor::backward_solve(std::span<double> z) const {
  const auto lp = col_ptr();
  const auto li = row_idx();
  for (Index j = size() - 1; j >= 0; --j) {
    double s = z[j];
    for (Index p = lp[j] + 1; p < lp[j + 1]; ++p) s -= values_[p] * z[li[p]];
    z[j] = s / values_[lp[j]];
  }
}

CholeskyFactor factorize(const SparseMatrix& a, Ordering ordering) {
  return CholeskyFactor::factorize(a, SymbolicCholesky::analyze(a, ordering));
}

CholeskyFactor factorize(const SparseMatrix& a, std::span<const Index> perm) {
  return CholeskyFactor::factorize(a, SymbolicCholesky::analyze(a, perm));
}

ClosureSet find_sparsity(const SymbolicCholesky& symbolic, Index x) {
  if (x < 0 || x >= symbolic.size()) throw InvalidArgument("find_sparsity: index out of range");
  const auto lp = symbolic.col_ptr();
  const auto li = symbolic.row_idx();
  ClosureSet s{x};
  Index j = x;
  while (lp[j + 1] - lp[j] > 1) {
    j = li[lp[j] + 1];
    s.push_back(j);
  }
  return s;
}

ClosureSet find_sparsity(const CholeskyFactor& factor, Index x) {
  return find_sparsity(factor.symbolic(), x);
}

namespace {

// Forward solve of L z = e_x into `work` (factor order, zero outside the
// closure on entry), visiting only the closure columns.
void closure_forward_solve(const CholeskyFactor& factor, Index x, const ClosureSet& closure,
                           std::span<double> work) {
  const auto lp = factor.col_ptr();
  const auto li = factor.row_idx();
  const auto lx = factor.values();
  work[x] = 1.0;
  for (const Index j : closure) {
    const double zj = work[j] / lx[lp[j]];
    work[j] = zj;
    for (Index p = lp[j] + 1; p < lp[j + 1]; ++p) work[li[p]] -= lx[p] * zj;
  }
}

}  // namespace

SparseVector partial_forward_solve(const CholeskyFactor& factor, Index x, const ClosureSet& closure) {
  if (x < 0 || x >= factor.size()) throw InvalidArgument("partial_forward_solve: index out of range");
  if (closure.empty() || closure.front() != x) {
    throw InvalidArgument("partial_forward_solve: closure does not start at x");
  }
  std::vector<double> work(factor.size(), 0.0);
  closure_forward_solve(factor, x, closure, work);
  SparseVector z(factor.size());
  z.reserve(static_cast<Index>(closure.size()));
  for (const Index j : closure) z.insertBack(static_cast<int>(j)) = work[j];
  return z;
}

SparseVector partial_forward_solve(const CholeskyFactor& factor, Index x) {
  return partial_forward_solve(factor, x, find_sparsity(factor, x));
}

Matrix solve_columns(const CholeskyFactor& factor, std::span<const Index> obs_indices,
                     std::span<const ClosureSet> closures) {
  const Index n = factor.size();
  if (closures.size() != obs_indices.size()) {
    throw InvalidArgument("solve_columns: one closure per observation is required");
  }
  const auto perm = factor.perm();
  const auto pinv = factor.inverse_perm();
  for (std::size_t k = 0; k < obs_indices.size(); ++k) {
    const Index obs = obs_indices[k];
    if (obs < 0 || obs >= n) throw InvalidArgument("solve_columns: index out of range");
    if (closures[k].empty() || closures[k].front() != pinv[obs]) {
      throw InvalidArgument("solve_columns: closure does not match observation");
    }
  }
  Matrix w(n, static_cast<Index>(obs_indices.size()));
  parallel_for(obs_indices.size(), [&](std::size_t k) {
    std::vector<double> col(n, 0.0);
    const Index x = pinv[obs_indices[k]];
    closure_forward_solve(factor, x, closures[k], col);
    factor.backward_solve(col);
    auto out = w.col(static_cast<Index>(k));
    for (Index i = 0; i < n; ++i) out[perm[i]] = col[i];
  });
  return w;
}

Matrix solve_columns(const CholeskyFactor& factor, std::span<const Index> obs_indices) {
  std::vector<ClosureSet> closures;
  closures.reserve(obs_indices.size());
  for (const Index obs : obs_indices) {
    if (obs < 0 || obs >= factor.size()) throw InvalidArgument("solve_columns: index out of range");
    closures.push_back(find_sparsity(factor, factor.inverse_perm()[obs]));
  }
  return solve_columns(factor, obs_indices, closures);
}

Vector full_solve(const CholeskyFactor& factor, const Vector& rhs) {
  const Index n = factor.size();
  if (rhs.size() != n) throw InvalidArgument("full_solve: rhs length differs from matrix size");
  const auto perm = factor.perm();
  std::vector<double> z(n);
  for (Index i = 0; i < n; ++i) z[i] = rhs[perm[i]];
  factor.forward_solve(z);
  factor.backward_solve(z);
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[perm[i]] = z[i];
  return x;
}

}  // namespace cklemap
