#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "cklemap/bench.hpp"
#include "cklemap/ckle.hpp"
#include "cklemap/gpr.hpp"
#include "cklemap/inverse.hpp"
#include "cklemap/mesh.hpp"
#include "cklemap/synth.hpp"

namespace cklemap {

// Field files: line 1 is N, then one value per line.
void write_field(std::ostream& out, const Field& field);
Field read_field(std::istream& in);
// Observation files: one `index value` pair per line.
void write_observations(std::ostream& out, const ObservationSet& obs);
ObservationSet read_observations(std::istream& in);

void save_field(const std::filesystem::path& path, const Field& field);
Field load_field(const std::filesystem::path& path);
void save_observations(const std::filesystem::path& path, const ObservationSet& obs);
ObservationSet load_observations(const std::filesystem::path& path);
void save_basis(const std::filesystem::path& path, const CkleBasis& basis);
CkleBasis load_basis(const std::filesystem::path& path);

/// Mesh spec as JSON. The mask is a list of rows of '0'/'1' characters, the
/// first row being j = 0.
nlohmann::json mesh_spec_to_json(const MeshSpec& spec);
MeshSpec mesh_spec_from_json(const nlohmann::json& j, const std::string& where = "mesh");

struct GpConfig {
  FitOptions fit;
  std::optional<KernelParams> fixed;  // use these hyperparameters instead of fitting
};

/// Complete run configuration. Only `mesh` (with nx, ny and boundaries) is
/// required; unknown keys anywhere are rejected. `mesh.active_mask` names a
/// raster file of ny lines with nx 0/1 tokens (first line j = 0), resolved
/// against `base_dir`; `mesh.mask` gives the same rows inline as strings.
struct RunConfig {
  MeshSpec mesh;
  SynthSpec synth;
  GpConfig gp;
  BasisOptions basis;
  InverseConfig inverse;
  BenchOptions bench;
};

RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
/// Fully expanded config, every default spelled out.
nlohmann::json config_to_json(const RunConfig& config);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Shortest round-trip-safe rendering used in every text artifact.
std::string format_double(double v);

}  // namespace cklemap
