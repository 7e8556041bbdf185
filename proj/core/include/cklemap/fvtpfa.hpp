#pragma once

#include <memory>

#include "cklemap/mesh.hpp"
#include "cklemap/sparse_cholesky.hpp"
#include "cklemap/types.hpp"

namespace cklemap {

/// Two-point transmissibility of a face between cells with log-transmissivity
/// y_i and y_j: (length / distance) * harmonic_mean(exp(y_i), exp(y_j)).
/// Throws InvalidParameter when the result is not finite and positive.
double face_transmissibility(double y_i, double y_j, double length, double distance);

/// A(y) u = b(y). A is symmetric with both triangles stored; Dirichlet faces
/// enter through half-cell transmissibilities so no rows are eliminated.
struct FvSystem {
  SparseMatrix a;
  Vector b;
};

/// Throws SingularSystem when the mesh has no Dirichlet face.
FvSystem assemble(const Mesh& mesh, const Field& y);

/// l = A u - b.
Vector residual(const FvSystem& system, const Field& u);

/// Direct solve through a natural-order sparse Cholesky factorization.
/// A factorization breakdown is rethrown naming the offending cell.
Field solve_forward(const FvSystem& system);

/// Forward solver that keeps the symbolic analysis of A across calls, since
/// the stiffness pattern depends only on the mesh.
class ForwardSolver {
 public:
  explicit ForwardSolver(const Mesh& mesh, Ordering ordering = Ordering::Natural);

  struct Solution {
    FvSystem system;
    CholeskyFactor factor;
    Field u;
  };

  Solution solve(const Field& y) const;

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const SymbolicCholesky>& symbolic() const { return symbolic_; }

 private:
  const Mesh* mesh_;
  std::shared_ptr<const SymbolicCholesky> symbolic_;
};

/// dl/dy_p at fixed u, i.e. (dA/dy_p) u - db/dy_p. Nonzero only on p and its
/// face neighbours.
SparseVector residual_sensitivity(const Mesh& mesh, const Field& y, const Field& u, Index p);

/// All residual sensitivities as the columns of an N x N sparse matrix.
SparseMatrix residual_sensitivity_matrix(const Mesh& mesh, const Field& y, const Field& u);

}  // namespace cklemap
