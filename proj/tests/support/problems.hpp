#pragma once

#include <cstdint>

#include "cklemap/cklemap.hpp"

namespace cklemap::testing {

/// Unit square with n x n cells: head 1 on the left, 0 on the right, no flow
/// across the bottom and the left half of the top, inflow across the right
/// half of the top.
MeshSpec square_spec(int n);

/// Strip of n x 1 cells of width dx with heads u_left and u_right at its ends.
MeshSpec strip_spec(int n, double dx, double u_left, double u_right);

/// All four sides Dirichlet with the given head.
MeshSpec dirichlet_box_spec(int nx, int ny, double head);

struct Problem {
  Mesh mesh;
  Dataset data;
  KernelParams kernel;  // fitted to the y observations
  Field mean;
  EigenPairs pairs;  // of the conditional covariance

  CkleBasis basis(const Truncation& t) const { return build_basis(mean, pairs, t); }
};

/// Synthetic problem on square_spec(n) drawn from Matern sigma = 1,
/// length = 0.25, with GP hyperparameters fitted to the y observations.
Problem make_problem(int n, Index n_u, Index n_y, std::uint64_t seed);

}  // namespace cklemap::testing
