#include <benchmark/benchmark.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "cklemap/cklemap.hpp"

namespace {

using namespace cklemap;

MeshSpec square(int n) {
  MeshSpec s;
  s.nx = s.ny = n;
  s.dx = s.dy = 1.0 / n;
  s.boundaries = {{Side::Left, {}, {BcKind::Dirichlet, 1.0}},
                  {Side::Right, {}, {BcKind::Dirichlet, 0.0}},
                  {Side::Bottom, {}, {BcKind::Neumann, 0.0}},
                  {Side::Top, {}, {BcKind::Neumann, 0.0}}};
  return s;
}

Field random_field(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.5);
  Field y(n);
  for (auto& v : y) v = normal(rng);
  return y;
}

std::vector<Index> random_cells(Index n, Index k, std::uint64_t seed) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(std::min(n, k)));
  std::sort(idx.begin(), idx.end());
  return idx;
}

void BM_Assemble(benchmark::State& state) {
  const Mesh m = build_mesh(square(static_cast<int>(state.range(0))));
  const Field y = random_field(m.num_cells(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(assemble(m, y));
  state.SetComplexityN(m.num_cells());
}
BENCHMARK(BM_Assemble)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

void BM_Factorize(benchmark::State& state) {
  const Mesh m = build_mesh(square(static_cast<int>(state.range(0))));
  const FvSystem sys = assemble(m, random_field(m.num_cells(), 2));
  const auto sym = SymbolicCholesky::analyze(sys.a);
  for (auto _ : state) benchmark::DoNotOptimize(CholeskyFactor::factorize(sys.a, sym));
}
BENCHMARK(BM_Factorize)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

void BM_ForwardSolve(benchmark::State& state) {
  const Mesh m = build_mesh(square(static_cast<int>(state.range(0))));
  const ForwardSolver solver(m);
  const Field y = random_field(m.num_cells(), 3);
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(y).u);
}
BENCHMARK(BM_ForwardSolve)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

// W = A^{-1} H^T for 200 observed cells: closure-restricted forward solves
// against full substitutions of unit vectors.
void BM_SolveColumnsAccelerated(benchmark::State& state) {
  const Mesh m = build_mesh(square(static_cast<int>(state.range(0))));
  const CholeskyFactor f = factorize(assemble(m, random_field(m.num_cells(), 4)).a);
  const auto obs = random_cells(m.num_cells(), 200, 5);
  std::vector<ClosureSet> closures;
  for (const Index o : obs) closures.push_back(find_sparsity(f, f.inverse_perm()[o]));
  for (auto _ : state) benchmark::DoNotOptimize(solve_columns(f, obs, closures));
}
BENCHMARK(BM_SolveColumnsAccelerated)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

void BM_SolveColumnsNaive(benchmark::State& state) {
  const Mesh m = build_mesh(square(static_cast<int>(state.range(0))));
  const CholeskyFactor f = factorize(assemble(m, random_field(m.num_cells(), 4)).a);
  const auto obs = random_cells(m.num_cells(), 200, 5);
  for (auto _ : state) {
    Matrix w(m.num_cells(), static_cast<Index>(obs.size()));
    for (std::size_t k = 0; k < obs.size(); ++k) {
      w.col(static_cast<Index>(k)) = full_solve(f, Vector::Unit(m.num_cells(), obs[k]));
    }
    benchmark::DoNotOptimize(w);
  }
}
BENCHMARK(BM_SolveColumnsNaive)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

void BM_ResidualSensitivities(benchmark::State& state) {
  const Mesh m = build_mesh(square(static_cast<int>(state.range(0))));
  const Field y = random_field(m.num_cells(), 6);
  const Field u = solve_forward(assemble(m, y));
  for (auto _ : state) benchmark::DoNotOptimize(residual_sensitivity_matrix(m, y, u));
}
BENCHMARK(BM_ResidualSensitivities)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

void BM_Eigendecompose(benchmark::State& state) {
  const Mesh m = build_mesh(square(static_cast<int>(state.range(0))));
  const auto pts = m.centers();
  const Matrix c = covariance(pts, pts, {1.0, 0.25, 1e-8}, true);
  for (auto _ : state) benchmark::DoNotOptimize(eigendecompose(c));
}
BENCHMARK(BM_Eigendecompose)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
