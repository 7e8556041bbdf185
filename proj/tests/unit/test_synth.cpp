#include <gtest/gtest.h>

#include <cmath>

#include "cklemap/error.hpp"
#include "cklemap/fvtpfa.hpp"
#include "cklemap/synth.hpp"
#include "problems.hpp"

namespace cklemap {
namespace {

TEST(GaussianField, SameSeedSameField) {
  const Mesh m = build_mesh(testing::square_spec(6));
  const KernelParams k{1.0, 0.3, 0.0};
  EXPECT_EQ(sample_gaussian_field(k, m, 42), sample_gaussian_field(k, m, 42));
  EXPECT_NE(sample_gaussian_field(k, m, 42), sample_gaussian_field(k, m, 43));
}

TEST(GaussianField, MonteCarloMoments) {
  const Mesh m = build_mesh(testing::square_spec(3));
  const KernelParams k{0.8, 0.4, 0.0};
  const int draws = 10000;
  Vector sum = Vector::Zero(m.num_cells()), sq = Vector::Zero(m.num_cells());
  for (int s = 0; s < draws; ++s) {
    const Field y = sample_gaussian_field(k, m, static_cast<std::uint64_t>(s));
    sum += y;
    sq += y.cwiseProduct(y);
  }
  const Vector mean = sum / draws;
  const Vector var = sq / draws - mean.cwiseProduct(mean);
  for (Index i = 0; i < m.num_cells(); ++i) {
    EXPECT_LE(std::abs(mean[i]), 3.0 * k.sigma / std::sqrt(double(draws))) << "cell " << i;
    EXPECT_NEAR(var[i], k.sigma * k.sigma, 0.1 * k.sigma * k.sigma) << "cell " << i;
  }
}

TEST(GaussianField, ZeroVarianceGivesZeroField) {
  const Mesh m = build_mesh(testing::square_spec(4));
  EXPECT_EQ(sample_gaussian_field({0.0, 0.3, 0.0}, m, 1), Field::Zero(16));
}

TEST(Reference, SatisfiesForwardModel) {
  const Mesh m = build_mesh(testing::square_spec(10));
  SynthSpec spec;
  spec.kernel = {1.0, 0.2, 0.0};
  spec.seed = 5;
  const Reference r = generate_reference(m, spec);
  EXPECT_LE(residual(assemble(m, r.y), r.u).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Reference, ZeroVarianceIsHomogeneousSolution) {
  const Mesh m = build_mesh(testing::strip_spec(8, 0.125, 1.0, 0.0));
  SynthSpec spec;
  spec.kernel = {0.0, 0.2, 0.0};
  const Reference r = generate_reference(m, spec);
  EXPECT_EQ(r.y, Field::Zero(8));
  EXPECT_LE((r.u - solve_forward(assemble(m, Field::Zero(8)))).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Reference, TrendIsAdded) {
  const Mesh m = build_mesh(testing::square_spec(4));
  SynthSpec spec;
  spec.kernel = {0.0, 0.2, 0.0};
  spec.trend = {0.5, -1.0, 2.0};
  const Reference r = generate_reference(m, spec);
  for (Index i = 0; i < m.num_cells(); ++i) {
    const Point p = m.centers()[i];
    EXPECT_DOUBLE_EQ(r.y[i], 0.5 - p.x + 2.0 * p.y);
  }
}

TEST(Reference, BoundaryCellsApproachDirichletHead) {
  // Cells next to the head-1 boundary get closer to 1 as the mesh refines.
  SynthSpec spec;
  spec.kernel = {0.0, 0.2, 0.0};
  double prev = 1.0;
  for (const int n : {4, 8, 16, 32}) {
    const Mesh m = build_mesh(testing::square_spec(n));
    const Reference r = generate_reference(m, spec);
    double gap = 0.0;
    for (int j = 0; j < n; ++j) gap = std::max(gap, std::abs(1.0 - r.u[m.cell_at(0, j)]));
    EXPECT_LT(gap, prev) << "n = " << n;
    prev = gap;
  }
}

TEST(Observations, AllCells) {
  const Field f = Vector::LinSpaced(9, 0, 8);
  for (const Index n : {Index{0}, Index{9}}) {
    const ObservationSet o = sample_observations(f, n, 1, WellPolicy::AllCells);
    ASSERT_EQ(o.size(), 9);
    for (Index k = 0; k < 9; ++k) EXPECT_EQ(o.indices()[k], k);
    EXPECT_EQ(o.values(), f);
  }
  EXPECT_THROW(sample_observations(f, 4, 1, WellPolicy::AllCells), InvalidArgument);
}

TEST(Observations, RandomSubsetContract) {
  const Field f = Vector::LinSpaced(50, -1, 1);
  const ObservationSet o = sample_observations(f, 12, 7, WellPolicy::RandomSubset);
  ASSERT_EQ(o.size(), 12);
  for (Index k = 0; k < 12; ++k) {
    if (k > 0) {
      EXPECT_LT(o.indices()[k - 1], o.indices()[k]);
    }
    EXPECT_EQ(o.values()[k], f[o.indices()[k]]);
  }
  const ObservationSet again = sample_observations(f, 12, 7, WellPolicy::RandomSubset);
  EXPECT_TRUE(std::equal(o.indices().begin(), o.indices().end(), again.indices().begin()));
  EXPECT_THROW(sample_observations(f, 51, 7, WellPolicy::RandomSubset), InvalidArgument);
  EXPECT_EQ(sample_observations(f, 50, 7, WellPolicy::RandomSubset).size(), 50);
}

TEST(Observations, DifferentSeedsDiffer) {
  const Field f = Vector::Zero(400);
  int same = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto a = sample_observations(f, 20, s, WellPolicy::RandomSubset);
    const auto b = sample_observations(f, 20, s + 1000, WellPolicy::RandomSubset);
    same += std::equal(a.indices().begin(), a.indices().end(), b.indices().begin());
  }
  EXPECT_EQ(same, 0);
}

TEST(Observations, StreamsAreIndependent) {
  const Field f = Vector::Zero(400);
  const auto y = sample_observations(f, 20, 3, WellPolicy::RandomSubset, Stream::YWells);
  const auto u = sample_observations(f, 20, 3, WellPolicy::RandomSubset, Stream::UWells);
  EXPECT_FALSE(std::equal(y.indices().begin(), y.indices().end(), u.indices().begin()));
}

TEST(WellPolicy, Names) {
  EXPECT_EQ(parse_well_policy("all-cells"), WellPolicy::AllCells);
  EXPECT_EQ(to_string(WellPolicy::RandomSubset), "random-subset");
  EXPECT_THROW(parse_well_policy("some"), InvalidArgument);
}

TEST(Dataset, ObservationsAreNoiseless) {
  const Mesh m = build_mesh(testing::square_spec(8));
  SynthSpec spec;
  spec.kernel = {1.0, 0.25, 0.0};
  spec.seed = 9;
  spec.n_y_obs = 6;
  spec.n_u_obs = 14;
  const Dataset d = generate_dataset(m, spec);
  EXPECT_EQ(d.obs_y.size(), 6);
  EXPECT_EQ(d.obs_u.size(), 14);
  for (Index k = 0; k < 6; ++k) EXPECT_EQ(d.obs_y.values()[k], d.reference.y[d.obs_y.indices()[k]]);
  for (Index k = 0; k < 14; ++k) EXPECT_EQ(d.obs_u.values()[k], d.reference.u[d.obs_u.indices()[k]]);
  const Dataset again = generate_dataset(m, spec);
  EXPECT_EQ(again.reference.y, d.reference.y);
  EXPECT_EQ(again.obs_u.values(), d.obs_u.values());
}

TEST(Refine, QuadruplesCellsAndKeepsConstants) {
  const Mesh m = build_mesh(testing::square_spec(5));
  const Refined r = refine_mesh(m, Field::Constant(25, 1.7));
  EXPECT_EQ(r.mesh.num_cells(), 100);
  EXPECT_LE((r.field.array() - 1.7).abs().maxCoeff(), 1e-14);
  const Refined rr = refine_mesh(r.mesh, r.field);
  EXPECT_EQ(rr.mesh.num_cells(), 16 * 25);
  EXPECT_DOUBLE_EQ(rr.mesh.spec().dx, 0.05);
}

TEST(Refine, AffineFieldsAreExact) {
  const Mesh m = build_mesh(testing::square_spec(6));
  const Trend t{0.3, 1.5, -2.0};
  Field y(m.num_cells());
  for (Index i = 0; i < m.num_cells(); ++i) y[i] = t(m.centers()[i]);
  const Refined r = refine_mesh(m, y);
  for (Index i = 0; i < r.mesh.num_cells(); ++i) EXPECT_NEAR(r.field[i], t(r.mesh.centers()[i]), 1e-13);
}

TEST(Refine, BoundaryConditionsCarryOver) {
  const Mesh m = build_mesh(testing::square_spec(4));
  const Refined r = refine_mesh(m, Field::Zero(16));
  double inflow = 0.0, inflow_fine = 0.0;
  for (const auto& f : m.boundary_faces()) {
    if (f.bc.kind == BcKind::Neumann) inflow += f.bc.value * f.length;
  }
  for (const auto& f : r.mesh.boundary_faces()) {
    if (f.bc.kind == BcKind::Neumann) inflow_fine += f.bc.value * f.length;
  }
  EXPECT_DOUBLE_EQ(inflow, inflow_fine);
  EXPECT_EQ(r.mesh.count(CellKind::Dirichlet), 2 * m.count(CellKind::Dirichlet));
}

TEST(Refine, MaskedMeshFallsBackToParent) {
  MeshSpec s = testing::dirichlet_box_spec(3, 3, 0.0);
  s.active_mask = {1, 1, 1, 1, 0, 1, 1, 1, 1};
  const Mesh m = build_mesh(s);
  Field y(m.num_cells());
  for (Index i = 0; i < m.num_cells(); ++i) y[i] = static_cast<double>(i);
  const Refined r = refine_mesh(m, y);
  EXPECT_EQ(r.mesh.num_cells(), 32);
  EXPECT_EQ(r.mesh.cell_at(2, 2), -1);
  EXPECT_EQ(r.mesh.cell_at(3, 3), -1);
  EXPECT_TRUE(r.field.allFinite());
  EXPECT_GE(r.field.minCoeff(), y.minCoeff() - 1.0);
}

}  // namespace
}  // namespace cklemap
