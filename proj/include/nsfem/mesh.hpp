#ifndef NSFEM_MESH_HPP
#define NSFEM_MESH_HPP

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace nsfem {

using Vec2 = Eigen::Vector2d;
using Triangle = std::array<int, 3>;

/// Conforming 2-D triangulation with per-vertex boundary flags.
///
/// Construction validates the invariants: counter-clockwise triangles with
/// strictly positive area, valid indices, and conformity (an edge is shared
/// by at most two triangles, traversed in opposite directions). The object
/// is immutable afterwards.
class TriMesh {
public:
  TriMesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles, std::vector<bool> boundary);

  int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
  int num_triangles() const noexcept { return static_cast<int>(triangles_.size()); }

  const std::vector<Vec2>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  const Vec2& vertex(int v) const { return vertices_[static_cast<std::size_t>(v)]; }
  const Triangle& triangle(int t) const { return triangles_[static_cast<std::size_t>(t)]; }
  bool is_boundary(int v) const { return boundary_[static_cast<std::size_t>(v)]; }
  const std::vector<bool>& boundary_flags() const noexcept { return boundary_; }

  /// Maximal element diameter.
  double mesh_size() const noexcept { return h_; }

  double area(int t) const;
  double total_area() const;

  /// Undirected edges (sorted endpoint pairs), each listed once.
  std::vector<std::array<int, 2>> edges() const;

  /// Max over elements of diameter / inradius.
  double shape_ratio() const;
  /// Smallest interior angle over all elements, in radians.
  double min_angle() const;

private:
  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<bool> boundary_;
  double h_ = 0.0;
};

/// Structured mesh of (0,1)^2 with n cells per side; every cell is split
/// along its lower-left to upper-right diagonal.
TriMesh unit_square_mesh(int n);

/// Red refinement: every triangle is split into four congruent children
/// through its edge midpoints.
TriMesh refine_uniform(const TriMesh& mesh);

/// Plain-text format: "vertices N triangles M", N lines "x y b", M lines "i j k".
TriMesh read_mesh(std::istream& in);
TriMesh load_mesh_file(const std::string& path);
void write_mesh(std::ostream& out, const TriMesh& mesh);

}  // namespace nsfem

#endif  // NSFEM_MESH_HPP
