#include "cklemap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <string>
#include <unordered_set>

#include "cklemap/error.hpp"

namespace cklemap {

std::string_view to_string(Side side) {
  switch (side) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Bottom: return "bottom";
    case Side::Top: return "top";
  }
  return "?";
}

std::string_view to_string(BcKind kind) {
  return kind == BcKind::Dirichlet ? "dirichlet" : "neumann";
}

Side parse_side(std::string_view text) {
  if (text == "left") return Side::Left;
  if (text == "right") return Side::Right;
  if (text == "bottom") return Side::Bottom;
  if (text == "top") return Side::Top;
  throw InvalidArgument("unknown boundary side '" + std::string(text) + "'");
}

BcKind parse_bc_kind(std::string_view text) {
  if (text == "dirichlet") return BcKind::Dirichlet;
  if (text == "neumann") return BcKind::Neumann;
  throw InvalidArgument("unknown boundary kind '" + std::string(text) + "'");
}

bool BoundaryRule::matches(Side face_side, int along) const {
  if (face_side != side) return false;
  if (!range) return true;
  return along >= range->first && along <= range->second;
}

bool MeshSpec::is_active(int i, int j) const {
  if (i < 0 || j < 0 || i >= nx || j >= ny) return false;
  if (active_mask.empty()) return true;
  return active_mask[static_cast<std::size_t>(j) * nx + i] != 0;
}

std::span<const Index> Mesh::cell_interior_faces(Index cell) const {
  const auto b = interior_offsets_[cell];
  const auto e = interior_offsets_[cell + 1];
  return {interior_incidence_.data() + b, static_cast<std::size_t>(e - b)};
}

std::span<const Index> Mesh::cell_boundary_faces(Index cell) const {
  const auto b = boundary_offsets_[cell];
  const auto e = boundary_offsets_[cell + 1];
  return {boundary_incidence_.data() + b, static_cast<std::size_t>(e - b)};
}

Index Mesh::cell_at(int i, int j) const {
  if (i < 0 || j < 0 || i >= spec_.nx || j >= spec_.ny) return -1;
  return lattice_to_cell_[static_cast<std::size_t>(j) * spec_.nx + i];
}

std::pair<int, int> Mesh::lattice_position(Index cell) const { return lattice_[cell]; }

Index Mesh::count(CellKind kind) const {
  return std::count(partition_.begin(), partition_.end(), kind);
}

bool Mesh::has_dirichlet() const {
  return std::any_of(boundary_faces_.begin(), boundary_faces_.end(),
                     [](const BoundaryFace& f) { return f.bc.kind == BcKind::Dirichlet; });
}

namespace {

void validate_spec(const MeshSpec& spec) {
  if (spec.nx <= 0 || spec.ny <= 0) throw InvalidArgument("mesh: nx and ny must be positive");
  if (!(spec.dx > 0.0) || !(spec.dy > 0.0) || !std::isfinite(spec.dx) || !std::isfinite(spec.dy)) {
    throw InvalidArgument("mesh: dx and dy must be positive and finite");
  }
  if (!spec.active_mask.empty() &&
      spec.active_mask.size() != static_cast<std::size_t>(spec.nx) * spec.ny) {
    throw InvalidArgument("mesh: active_mask must have nx*ny entries");
  }
  for (const auto& rule : spec.boundaries) {
    if (!std::isfinite(rule.bc.value)) throw InvalidArgument("mesh: boundary value must be finite");
    if (rule.range && rule.range->first > rule.range->second) {
      throw InvalidArgument("mesh: boundary range must satisfy j0 <= j1");
    }
  }
}

// Flood fill from the first active cell over 4-neighbours.
void check_connected(const Mesh& mesh) {
  const Index n = mesh.num_cells();
  std::vector<char> seen(n, 0);
  std::queue<Index> queue;
  queue.push(0);
  seen[0] = 1;
  Index visited = 0;
  while (!queue.empty()) {
    const Index c = queue.front();
    queue.pop();
    ++visited;
    const auto [i, j] = mesh.lattice_position(c);
    for (const auto& [di, dj] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
      const Index nb = mesh.cell_at(i + di, j + dj);
      if (nb >= 0 && !seen[nb]) {
        seen[nb] = 1;
        queue.push(nb);
      }
    }
  }
  if (visited != n) {
    std::ostringstream msg;
    msg << "mesh: active cells are not connected (" << visited << " of " << n
        << " reachable from cell 0)";
    throw InvalidArgument(msg.str());
  }
}

}  // namespace

Mesh build_mesh(const MeshSpec& spec) {
  validate_spec(spec);

  Mesh mesh;
  mesh.spec_ = spec;
  mesh.lattice_to_cell_.assign(static_cast<std::size_t>(spec.nx) * spec.ny, -1);
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      if (!spec.is_active(i, j)) continue;
      mesh.lattice_to_cell_[static_cast<std::size_t>(j) * spec.nx + i] = mesh.num_cells();
      mesh.lattice_.emplace_back(i, j);
      mesh.centers_.push_back({(i + 0.5) * spec.dx, (j + 0.5) * spec.dy});
    }
  }
  if (mesh.num_cells() == 0) throw InvalidArgument("mesh: no active cells");
  check_connected(mesh);

  const Index n = mesh.num_cells();
  for (Index c = 0; c < n; ++c) {
    const auto [i, j] = mesh.lattice_[c];
    // Each interior face is emitted once, from its left/bottom cell.
    if (const Index east = mesh.cell_at(i + 1, j); east >= 0) {
      mesh.interior_faces_.push_back({c, east, spec.dy, spec.dx});
    }
    if (const Index north = mesh.cell_at(i, j + 1); north >= 0) {
      mesh.interior_faces_.push_back({c, north, spec.dx, spec.dy});
    }

    struct Candidate {
      Side side;
      int di, dj, along;
      double length, half;
    };
    const Candidate candidates[] = {
        {Side::Left, -1, 0, j, spec.dy, 0.5 * spec.dx},
        {Side::Right, 1, 0, j, spec.dy, 0.5 * spec.dx},
        {Side::Bottom, 0, -1, i, spec.dx, 0.5 * spec.dy},
        {Side::Top, 0, 1, i, spec.dx, 0.5 * spec.dy},
    };
    for (const auto& cand : candidates) {
      if (mesh.cell_at(i + cand.di, j + cand.dj) >= 0) continue;
      const BoundaryRule* match = nullptr;
      for (const auto& rule : spec.boundaries) {
        if (!rule.matches(cand.side, cand.along)) continue;
        if (match != nullptr) {
          std::ostringstream msg;
          msg << "mesh: " << to_string(cand.side) << " face of cell (" << i << "," << j
              << ") matches more than one boundary rule";
          throw InvalidArgument(msg.str());
        }
        match = &rule;
      }
      if (match == nullptr) {
        std::ostringstream msg;
        msg << "mesh: " << to_string(cand.side) << " face of cell (" << i << "," << j
            << ") is not matched by any boundary rule";
        throw InvalidArgument(msg.str());
      }
      mesh.boundary_faces_.push_back({c, cand.side, cand.length, cand.half, match->bc});
    }
  }

  // Incidence lists (CSR by cell).
  mesh.interior_offsets_.assign(n + 1, 0);
  for (const auto& f : mesh.interior_faces_) {
    ++mesh.interior_offsets_[f.lo + 1];
    ++mesh.interior_offsets_[f.hi + 1];
  }
  for (Index c = 0; c < n; ++c) mesh.interior_offsets_[c + 1] += mesh.interior_offsets_[c];
  mesh.interior_incidence_.resize(mesh.interior_offsets_[n]);
  {
    auto next = mesh.interior_offsets_;
    for (Index f = 0; f < static_cast<Index>(mesh.interior_faces_.size()); ++f) {
      mesh.interior_incidence_[next[mesh.interior_faces_[f].lo]++] = f;
      mesh.interior_incidence_[next[mesh.interior_faces_[f].hi]++] = f;
    }
  }
  mesh.boundary_offsets_.assign(n + 1, 0);
  for (const auto& f : mesh.boundary_faces_) ++mesh.boundary_offsets_[f.cell + 1];
  for (Index c = 0; c < n; ++c) mesh.boundary_offsets_[c + 1] += mesh.boundary_offsets_[c];
  mesh.boundary_incidence_.resize(mesh.boundary_offsets_[n]);
  {
    auto next = mesh.boundary_offsets_;
    for (Index f = 0; f < static_cast<Index>(mesh.boundary_faces_.size()); ++f) {
      mesh.boundary_incidence_[next[mesh.boundary_faces_[f].cell]++] = f;
    }
  }

  // Dirichlet wins over Neumann for cells touching both.
  mesh.partition_.assign(n, CellKind::Interior);
  for (const auto& f : mesh.boundary_faces_) {
    auto& kind = mesh.partition_[f.cell];
    if (f.bc.kind == BcKind::Dirichlet) {
      kind = CellKind::Dirichlet;
    } else if (kind == CellKind::Interior) {
      kind = CellKind::Neumann;
    }
  }
  return mesh;
}

SparseMatrix gradient_operator(const Mesh& mesh) {
  const auto faces = mesh.interior_faces();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const double w = 1.0 / faces[f].distance;
    triplets.emplace_back(static_cast<int>(f), static_cast<int>(faces[f].lo), -w);
    triplets.emplace_back(static_cast<int>(f), static_cast<int>(faces[f].hi), w);
  }
  SparseMatrix d(static_cast<Index>(faces.size()), mesh.num_cells());
  d.setFromTriplets(triplets.begin(), triplets.end());
  return d;
}

ObservationSet::ObservationSet(std::vector<Index> indices, Vector values)
    : indices_(std::move(indices)), values_(std::move(values)) {
  if (static_cast<Index>(indices_.size()) != values_.size()) {
    throw InvalidArgument("observations: index and value counts differ");
  }
  std::unordered_set<Index> seen;
  for (const Index idx : indices_) {
    if (idx < 0) throw InvalidArgument("observations: negative index");
    if (!seen.insert(idx).second) {
      throw InvalidArgument("observations: duplicate index " + std::to_string(idx));
    }
  }
  if (!values_.allFinite()) throw InvalidArgument("observations: non-finite value");
}

ObservationSet ObservationSet::sample(const Field& field, std::vector<Index> indices) {
  Vector values(static_cast<Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 0 || indices[k] >= field.size()) {
      throw InvalidArgument("observations: index out of range");
    }
    values[static_cast<Index>(k)] = field[indices[k]];
  }
  return ObservationSet(std::move(indices), std::move(values));
}

void ObservationSet::check_bounds(Index num_cells) const {
  for (const Index idx : indices_) {
    if (idx >= num_cells) {
      throw InvalidArgument("observations: index " + std::to_string(idx) +
                            " outside mesh of " + std::to_string(num_cells) + " cells");
    }
  }
}

SparseMatrix observation_matrix(std::span<const Index> indices, Index num_cells) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 0 || indices[k] >= num_cells) {
      throw InvalidArgument("observation_matrix: index " + std::to_string(indices[k]) +
                            " out of range");
    }
    triplets.emplace_back(static_cast<int>(k), static_cast<int>(indices[k]), 1.0);
  }
  SparseMatrix h(static_cast<Index>(indices.size()), num_cells);
  h.setFromTriplets(triplets.begin(), triplets.end());
  return h;
}

}  // namespace cklemap
