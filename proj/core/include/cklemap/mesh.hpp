#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "cklemap/types.hpp"

namespace cklemap {

enum class Side : std::uint8_t { Left, Right, Bottom, Top };
enum class BcKind : std::uint8_t { Dirichlet, Neumann };

std::string_view to_string(Side side);
std::string_view to_string(BcKind kind);
Side parse_side(std::string_view text);
BcKind parse_bc_kind(std::string_view text);

/// Dirichlet: prescribed head. Neumann: outward normal flux per unit face
/// length, i.e. T grad(u).n = -value.
struct BoundaryCondition {
  BcKind kind = BcKind::Neumann;
  double value = 0.0;
};

/// Assigns a condition to the exterior faces whose outward normal points to
/// `side`. `range` is an inclusive lattice interval along that side: the row
/// index j for left/right faces, the column index i for bottom/top faces.
/// No range means the whole side.
struct BoundaryRule {
  Side side = Side::Left;
  std::optional<std::pair<int, int>> range;
  BoundaryCondition bc;

  bool matches(Side face_side, int along) const;
};

/// Structured lattice description. Lattice cell (i, j) sits at
/// x = (i + 1/2) dx, y = (j + 1/2) dy; `active_mask` is indexed j * nx + i
/// and an empty mask means every cell is active.
struct MeshSpec {
  int nx = 0;
  int ny = 0;
  double dx = 1.0;
  double dy = 1.0;
  std::vector<std::uint8_t> active_mask;
  std::vector<BoundaryRule> boundaries;

  bool is_active(int i, int j) const;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Face shared by active cells `lo` < `hi`.
struct InteriorFace {
  Index lo = 0;
  Index hi = 0;
  double length = 0.0;
  double distance = 0.0;
};

struct BoundaryFace {
  Index cell = 0;
  Side side = Side::Left;
  double length = 0.0;
  double half_distance = 0.0;  // cell centre to face centre
  BoundaryCondition bc;
};

enum class CellKind : std::uint8_t { Interior, Neumann, Dirichlet };

/// Cell-centred finite-volume mesh over the active cells of a MeshSpec.
/// Cells are numbered row-major (j outer, i inner) over active lattice cells.
/// Immutable after construction.
class Mesh {
 public:
  Index num_cells() const { return static_cast<Index>(centers_.size()); }
  const MeshSpec& spec() const { return spec_; }

  std::span<const Point> centers() const { return centers_; }
  std::span<const InteriorFace> interior_faces() const { return interior_faces_; }
  std::span<const BoundaryFace> boundary_faces() const { return boundary_faces_; }
  std::span<const CellKind> partition() const { return partition_; }

  /// Interior faces incident to `cell`, as indices into interior_faces().
  std::span<const Index> cell_interior_faces(Index cell) const;
  /// Boundary faces of `cell`, as indices into boundary_faces().
  std::span<const Index> cell_boundary_faces(Index cell) const;

  /// Cell index of lattice position (i, j), or -1 when inactive / outside.
  Index cell_at(int i, int j) const;
  std::pair<int, int> lattice_position(Index cell) const;

  Index count(CellKind kind) const;
  bool has_dirichlet() const;

 private:
  friend Mesh build_mesh(const MeshSpec& spec);

  MeshSpec spec_;
  std::vector<Point> centers_;
  std::vector<std::pair<int, int>> lattice_;
  std::vector<Index> lattice_to_cell_;
  std::vector<InteriorFace> interior_faces_;
  std::vector<BoundaryFace> boundary_faces_;
  std::vector<CellKind> partition_;
  std::vector<Index> interior_offsets_, interior_incidence_;
  std::vector<Index> boundary_offsets_, boundary_incidence_;
};

/// Throws InvalidArgument for an empty or disconnected active set and for
/// exterior faces matched by zero or by several boundary rules.
Mesh build_mesh(const MeshSpec& spec);

/// Discrete gradient across interior faces: row f has -1/d at `lo` and
/// +1/d at `hi`. Shape (#interior faces) x N.
SparseMatrix gradient_operator(const Mesh& mesh);

/// Indexed point measurements of a cell field. Indices are unique and in
/// [0, N) for the mesh they are used with.
class ObservationSet {
 public:
  ObservationSet() = default;
  ObservationSet(std::vector<Index> indices, Vector values);

  /// Gathers `field` at `indices`.
  static ObservationSet sample(const Field& field, std::vector<Index> indices);

  Index size() const { return static_cast<Index>(indices_.size()); }
  bool empty() const { return indices_.empty(); }
  std::span<const Index> indices() const { return indices_; }
  const Vector& values() const { return values_; }

  /// Throws InvalidArgument unless every index is below `num_cells`.
  void check_bounds(Index num_cells) const;

 private:
  std::vector<Index> indices_;
  Vector values_;
};

/// Rows of the N x N identity selected by `indices`.
SparseMatrix observation_matrix(std::span<const Index> indices, Index num_cells);

}  // namespace cklemap
