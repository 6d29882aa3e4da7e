#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

namespace lgc {

using VertexId = int;
using FaceId = int;

/// Row-major id layout of the triangulated grid: vertex (i,j) has id
/// j*(W+1)+i, face Delta_ij has id j*W+i.
struct GridLayout {
  int width = 0;   // W, faces per row
  int height = 0;  // H, face rows

  int num_vertices() const { return (width + 1) * (height + 1); }
  int num_faces() const { return width * height; }
  bool has_vertex(int i, int j) const { return 0 <= i && i <= width && 0 <= j && j <= height; }
  bool has_face(int i, int j) const { return 0 <= i && i < width && 0 <= j && j < height; }
  VertexId vertex(int i, int j) const;
  FaceId face(int i, int j) const;
  std::pair<int, int> vertex_index(VertexId v) const { return {v % (width + 1), v / (width + 1)}; }
  std::pair<int, int> face_index(FaceId f) const { return {f % width, f / width}; }
};

/// Finite cellular complex restricted to its vertex/face adherence.
///
/// A vertex may be flagged as having a truncated star: its spherical
/// neighborhood in the ambient complex contains faces that were not
/// materialized (the boundary ring of a window cut out of the plane). Such a
/// vertex can never be interior to a face set of this complex.
class CellComplex {
 public:
  CellComplex(int num_vertices, std::vector<std::vector<VertexId>> adherence,
              std::vector<VertexId> truncated = {});

  int num_vertices() const { return num_vertices_; }
  int num_faces() const { return static_cast<int>(adherence_.size()); }

  std::span<const VertexId> adherence(FaceId f) const;
  std::span<const FaceId> star(VertexId v) const;
  bool star_truncated(VertexId v) const;
  /// Position of `v` in the adherence list of `f`, or -1.
  int slot(FaceId f, VertexId v) const;

  /// Set when the complex came from build_triangulated_grid.
  const std::optional<GridLayout>& grid() const { return grid_; }

  void write(std::ostream& os) const;
  static CellComplex read(std::istream& is);

 private:
  friend CellComplex build_triangulated_grid(int, int);

  int num_vertices_;
  std::vector<std::vector<VertexId>> adherence_;
  std::vector<std::vector<FaceId>> star_;
  std::vector<bool> truncated_;
  std::optional<GridLayout> grid_;
};

/// Faces Delta_ij = [(i,j),(i+1,j),(i,j+1)], 0 <= i < W, 0 <= j < H, of the
/// triangulated plane, with the row-major ids of GridLayout. The boundary
/// ring (i in {0,W} or j in {0,H}) is flagged truncated. Not periodic.
CellComplex build_triangulated_grid(int width, int height);

/// A finite set of faces together with its adherent vertices.
class FaceSet {
 public:
  FaceSet(const CellComplex& complex, std::vector<FaceId> faces);
  static FaceSet all(const CellComplex& complex);

  const std::vector<FaceId>& faces() const { return faces_; }
  const std::vector<VertexId>& adherent_vertices() const { return adherent_; }
  bool contains(FaceId f) const;
  bool empty() const { return faces_.empty(); }

 private:
  std::vector<FaceId> faces_;       // sorted, unique
  std::vector<VertexId> adherent_;  // sorted, unique
};

struct VertexClass {
  std::vector<VertexId> interior;  // sorted
  std::vector<VertexId> frontier;  // sorted

  bool is_interior(VertexId v) const;
  bool is_frontier(VertexId v) const;
};

VertexClass classify_vertices(const CellComplex& complex, const FaceSet& faces);

}  // namespace lgc
