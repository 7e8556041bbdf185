#include "cklemap/synth.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cklemap/error.hpp"
#include "cklemap/fvtpfa.hpp"

namespace cklemap {

std::string_view to_string(WellPolicy policy) {
  return policy == WellPolicy::AllCells ? "all-cells" : "random-subset";
}

WellPolicy parse_well_policy(std::string_view text) {
  if (text == "all-cells") return WellPolicy::AllCells;
  if (text == "random-subset") return WellPolicy::RandomSubset;
  throw InvalidArgument("unknown well policy '" + std::string(text) + "' (expected all-cells or random-subset)");
}

std::mt19937_64 make_rng(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

Field sample_gaussian_field(const KernelParams& kernel, const Mesh& mesh, std::uint64_t seed) {
  const Index n = mesh.num_cells();
  if (kernel.sigma == 0.0) return Field::Zero(n);
  kernel.validate();

  const auto centers = mesh.centers();
  const Matrix c = covariance(centers, centers, kernel, true);
  const double var = kernel.sigma * kernel.sigma;
  Matrix shifted = c;
  Eigen::LLT<Matrix> llt;
  bool ok = false;
  for (double jitter = 1e-10 * var; jitter <= 1e-4 * var; jitter *= 100.0) {
    const double extra = std::max(0.0, jitter - kernel.nugget);
    shifted.diagonal() = c.diagonal().array() + extra;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) {
      ok = true;
      break;
    }
  }
  if (!ok) throw NotPositiveDefinite("sample_gaussian_field: prior covariance could not be factorized", -1);

  auto rng = make_rng(seed, Stream::Field);
  std::normal_distribution<double> normal;
  Vector z(n);
  for (Index i = 0; i < n; ++i) z[i] = normal(rng);
  return llt.matrixL() * z;
}

Reference generate_reference(const Mesh& mesh, const SynthSpec& spec) {
  Reference ref;
  ref.y = sample_gaussian_field(spec.kernel, mesh, spec.seed);
  const auto centers = mesh.centers();
  for (Index i = 0; i < mesh.num_cells(); ++i) ref.y[i] += spec.trend(centers[i]);
  ref.u = solve_forward(assemble(mesh, ref.y));
  return ref;
}

ObservationSet sample_observations(const Field& field, Index n, std::uint64_t seed, WellPolicy policy,
                                   Stream stream) {
  const Index total = field.size();
  std::vector<Index> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (policy == WellPolicy::AllCells) {
    if (n != 0 && n != total) {
      std::ostringstream msg;
      msg << "all-cells policy observes " << total << " cells, but " << n << " were requested";
      throw InvalidArgument(msg.str());
    }
    return ObservationSet::sample(field, std::move(idx));
  }
  if (n < 0 || n > total) {
    std::ostringstream msg;
    msg << "cannot draw " << n << " distinct cells from " << total;
    throw InvalidArgument(msg.str());
  }
  // Partial Fisher-Yates shuffle.
  auto rng = make_rng(seed, stream);
  for (Index k = 0; k < n; ++k) {
    std::uniform_int_distribution<Index> pick(k, total - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  idx.resize(static_cast<std::size_t>(n));
  std::sort(idx.begin(), idx.end());
  return ObservationSet::sample(field, std::move(idx));
}

Dataset generate_dataset(const Mesh& mesh, const SynthSpec& spec) {
  Dataset d;
  d.reference = generate_reference(mesh, spec);
  d.obs_y = sample_observations(d.reference.y, spec.n_y_obs, spec.seed, WellPolicy::RandomSubset, Stream::YWells);
  d.obs_u = sample_observations(d.reference.u, spec.n_u_obs, spec.seed, spec.well_policy, Stream::UWells);
  return d;
}

MeshSpec refine_spec(const MeshSpec& spec) {
  MeshSpec fine = spec;
  fine.nx = 2 * spec.nx;
  fine.ny = 2 * spec.ny;
  fine.dx = 0.5 * spec.dx;
  fine.dy = 0.5 * spec.dy;
  if (!spec.active_mask.empty()) {
    fine.active_mask.assign(static_cast<std::size_t>(fine.nx) * fine.ny, 0);
    for (int j = 0; j < fine.ny; ++j) {
      for (int i = 0; i < fine.nx; ++i) {
        fine.active_mask[static_cast<std::size_t>(j) * fine.nx + i] = spec.is_active(i / 2, j / 2) ? 1 : 0;
      }
    }
  }
  for (auto& rule : fine.boundaries) {
    if (rule.range) rule.range = std::pair{2 * rule.range->first, 2 * rule.range->second + 1};
  }
  return fine;
}

Refined refine_mesh(const Mesh& mesh, const Field& field) {
  if (field.size() != mesh.num_cells()) throw InvalidArgument("refine_mesh: field does not match the mesh");
  const MeshSpec& coarse = mesh.spec();
  Refined out{build_mesh(refine_spec(coarse)), Field()};
  out.field.resize(out.mesh.num_cells());

  // Coarse lattice coordinate of a fine centre along one axis, split into a
  // base index and weight; the base is clamped so edges extrapolate.
  auto axis = [](int fine_index, int coarse_n) {
    const double s = 0.5 * fine_index - 0.25;
    if (coarse_n == 1) return std::pair{0, 0.0};
    const int base = std::clamp(static_cast<int>(std::floor(s)), 0, coarse_n - 2);
    return std::pair{base, s - base};
  };

  for (Index c = 0; c < out.mesh.num_cells(); ++c) {
    const auto [fi, fj] = out.mesh.lattice_position(c);
    const Index parent = mesh.cell_at(fi / 2, fj / 2);
    const auto [i0, tx] = axis(fi, coarse.nx);
    const auto [j0, ty] = axis(fj, coarse.ny);
    const int i1 = coarse.nx == 1 ? i0 : i0 + 1;
    const int j1 = coarse.ny == 1 ? j0 : j0 + 1;
    const Index c00 = mesh.cell_at(i0, j0), c10 = mesh.cell_at(i1, j0);
    const Index c01 = mesh.cell_at(i0, j1), c11 = mesh.cell_at(i1, j1);
    if (c00 < 0 || c10 < 0 || c01 < 0 || c11 < 0) {
      out.field[c] = field[parent];
      continue;
    }
    out.field[c] = (1 - tx) * (1 - ty) * field[c00] + tx * (1 - ty) * field[c10] + (1 - tx) * ty * field[c01] +
                   tx * ty * field[c11];
  }
  return out;
}

}  // namespace cklemap
