#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "cklemap/gpr.hpp"
#include "cklemap/mesh.hpp"

namespace cklemap {

enum class WellPolicy { AllCells, RandomSubset };

std::string_view to_string(WellPolicy policy);
WellPolicy parse_well_policy(std::string_view text);

/// Deterministic additive trend c0 + cx x + cy y.
struct Trend {
  double c0 = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  double operator()(const Point& p) const { return c0 + cx * p.x + cy * p.y; }
};

struct SynthSpec {
  KernelParams kernel;
  std::uint64_t seed = 0;
  Index n_y_obs = 0;
  Index n_u_obs = 0;
  WellPolicy well_policy = WellPolicy::RandomSubset;
  Trend trend;
};

/// Independent random streams derived from one seed.
enum class Stream : std::uint32_t { Field = 0, YWells = 1, UWells = 2 };
std::mt19937_64 make_rng(std::uint64_t seed, Stream stream);

/// Zero-mean Gaussian draw with the kernel covariance at cell centres, via a
/// dense Cholesky. A diagonal jitter (at least the kernel nugget, escalated
/// from 1e-10 sigma^2 if needed) keeps the factorization stable. sigma = 0
/// gives the zero field.
Field sample_gaussian_field(const KernelParams& kernel, const Mesh& mesh, std::uint64_t seed);

struct Reference {
  Field y;
  Field u;
};

/// y = draw + trend, u = forward solve of y.
Reference generate_reference(const Mesh& mesh, const SynthSpec& spec);

/// `n` distinct cells drawn uniformly (RandomSubset) or every cell
/// (AllCells, where n must be 0 or N). Indices are returned ascending.
ObservationSet sample_observations(const Field& field, Index n, std::uint64_t seed, WellPolicy policy,
                                   Stream stream = Stream::YWells);

struct Dataset {
  Reference reference;
  ObservationSet obs_y;
  ObservationSet obs_u;
};

/// Reference fields plus noiseless observations of y and u.
Dataset generate_dataset(const Mesh& mesh, const SynthSpec& spec);

/// Mesh spec with every lattice cell split into 2 x 2 subcells; boundary rule
/// ranges are widened to cover the subdivided faces.
MeshSpec refine_spec(const MeshSpec& spec);

struct Refined {
  Mesh mesh;
  Field field;
};

/// Subdivides every active cell into four and interpolates `field`
/// bilinearly between coarse cell centres (linear extrapolation in the
/// outermost half cell). Where a needed coarse neighbour is inactive the
/// parent value is used.
Refined refine_mesh(const Mesh& mesh, const Field& field);

}  // namespace cklemap
