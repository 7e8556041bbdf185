#pragma once

// Dense reference implementations used to check the sparse and structured
// code paths. Deliberately naive.

#include <cstdint>
#include <random>
#include <vector>

#include "cklemap/types.hpp"

namespace cklemap::testing {

/// Textbook column Cholesky; returns an empty matrix if A is not SPD.
Matrix dense_cholesky(const Matrix& a);
/// Solves L z = b by forward substitution.
Vector dense_forward(const Matrix& l, const Vector& b);
/// Solves L^T x = z by backward substitution.
Vector dense_backward(const Matrix& l, const Vector& z);
/// A^{-1} b through dense_cholesky.
Vector dense_solve(const Matrix& a, const Vector& b);

/// Random sparse SPD matrix with a symmetric pattern: each off-diagonal pair
/// is present with probability `density`, values in [-1, 0), and the
/// diagonal dominates.
SparseMatrix random_spd(Index n, double density, std::mt19937_64& rng);

/// Symmetric pattern from 1-based edge list, unit off-diagonals, diagonal
/// equal to degree + 1.
SparseMatrix graph_matrix(Index n, const std::vector<std::pair<int, int>>& edges);

/// Eight-vertex graph whose elimination tree puts vertex 3 (1-based) on the
/// path 3 -> 4 -> 6 -> 7 -> 8.
SparseMatrix eight_vertex_example();

/// Parent of column j: first row below the diagonal that is structurally
/// nonzero in the dense factor of the pattern (fill included).
std::vector<Index> dense_etree(const SparseMatrix& a);

/// Structural nonzero set of L^{-1} e_x, using symbolic fill only.
std::vector<Index> dense_reach(const SparseMatrix& a, Index x);

/// Random unit vector.
Vector random_unit(Index n, std::mt19937_64& rng);

}  // namespace cklemap::testing
