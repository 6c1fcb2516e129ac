#include "nsfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "nsfem/errors.hpp"

namespace nsfem {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c)
{
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

std::array<int, 2> sorted_edge(int a, int b) { return a < b ? std::array{a, b} : std::array{b, a}; }

}  // namespace

TriMesh::TriMesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles, std::vector<bool> boundary)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), boundary_(std::move(boundary))
{
  if (vertices_.empty() || triangles_.empty()) throw MeshError("mesh must have at least one triangle");
  if (boundary_.size() != vertices_.size())
    throw MeshError("boundary flag count " + std::to_string(boundary_.size()) + " != vertex count " +
                    std::to_string(vertices_.size()));

  for (const auto& v : vertices_)
    if (!std::isfinite(v.x()) || !std::isfinite(v.y())) throw MeshError("non-finite vertex coordinate");

  // directed edge -> owning triangle; a conforming, consistently oriented
  // mesh never repeats a directed edge
  std::map<std::array<int, 2>, int> directed;
  const int nv = num_vertices();
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = triangles_[static_cast<std::size_t>(t)];
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= nv)
        throw MeshError("triangle " + std::to_string(t) + " references vertex " + std::to_string(tri[k]) +
                        " out of range");
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw MeshError("triangle " + std::to_string(t) + " has repeated vertices");
    const double a = signed_area(vertex(tri[0]), vertex(tri[1]), vertex(tri[2]));
    if (!(a > 0.0))
      throw MeshError("triangle " + std::to_string(t) + " has non-positive signed area " + std::to_string(a));
    for (int k = 0; k < 3; ++k) {
      const std::array<int, 2> e{tri[k], tri[(k + 1) % 3]};
      if (!directed.emplace(e, t).second)
        throw MeshError("non-conforming mesh: edge (" + std::to_string(e[0]) + ", " + std::to_string(e[1]) +
                        ") used twice with the same orientation (triangle " + std::to_string(t) + ")");
    }
    for (int k = 0; k < 3; ++k) {
      const Vec2 d = vertex(tri[(k + 1) % 3]) - vertex(tri[k]);
      h_ = std::max(h_, d.norm());
    }
  }
}

double TriMesh::area(int t) const
{
  const auto& tri = triangle(t);
  return signed_area(vertex(tri[0]), vertex(tri[1]), vertex(tri[2]));
}

double TriMesh::total_area() const
{
  double sum = 0.0;
  for (int t = 0; t < num_triangles(); ++t) sum += area(t);
  return sum;
}

std::vector<std::array<int, 2>> TriMesh::edges() const
{
  std::vector<std::array<int, 2>> out;
  out.reserve(3 * triangles_.size());
  for (const auto& tri : triangles_)
    for (int k = 0; k < 3; ++k) out.push_back(sorted_edge(tri[k], tri[(k + 1) % 3]));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double TriMesh::shape_ratio() const
{
  double worst = 0.0;
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = triangle(t);
    double diam = 0.0;
    double perimeter = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double len = (vertex(tri[(k + 1) % 3]) - vertex(tri[k])).norm();
      diam = std::max(diam, len);
      perimeter += len;
    }
    const double inradius = 2.0 * area(t) / perimeter;
    worst = std::max(worst, diam / inradius);
  }
  return worst;
}

double TriMesh::min_angle() const
{
  double smallest = std::numbers::pi;
  for (const auto& tri : triangles_) {
    for (int k = 0; k < 3; ++k) {
      const Vec2 a = vertex(tri[(k + 1) % 3]) - vertex(tri[k]);
      const Vec2 b = vertex(tri[(k + 2) % 3]) - vertex(tri[k]);
      const double cosine = std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
      smallest = std::min(smallest, std::acos(cosine));
    }
  }
  return smallest;
}

TriMesh unit_square_mesh(int n)
{
  if (n < 1) throw std::invalid_argument("unit_square_mesh: subdivisions must be >= 1, got " + std::to_string(n));
  const int side = n + 1;
  std::vector<Vec2> vertices;
  std::vector<bool> boundary;
  vertices.reserve(static_cast<std::size_t>(side * side));
  boundary.reserve(static_cast<std::size_t>(side * side));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
      boundary.push_back(i == 0 || j == 0 || i == n || j == n);
    }
  }
  std::vector<Triangle> triangles;
  triangles.reserve(static_cast<std::size_t>(2 * n * n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = j * side + i;
      const int v10 = v00 + 1;
      const int v01 = v00 + side;
      const int v11 = v01 + 1;
      triangles.push_back({v00, v10, v11});
      triangles.push_back({v00, v11, v01});
    }
  }
  return TriMesh(std::move(vertices), std::move(triangles), std::move(boundary));
}

TriMesh refine_uniform(const TriMesh& mesh)
{
  std::vector<Vec2> vertices = mesh.vertices();
  std::vector<bool> boundary = mesh.boundary_flags();

  // edges owned by a single triangle lie on the boundary
  std::map<std::array<int, 2>, int> edge_count;
  for (const auto& tri : mesh.triangles())
    for (int k = 0; k < 3; ++k) ++edge_count[sorted_edge(tri[k], tri[(k + 1) % 3])];

  std::map<std::array<int, 2>, int> midpoint;
  for (const auto& [edge, count] : edge_count) {
    midpoint[edge] = static_cast<int>(vertices.size());
    vertices.push_back(0.5 * (mesh.vertex(edge[0]) + mesh.vertex(edge[1])));
    boundary.push_back(count == 1);
  }

  std::vector<Triangle> triangles;
  triangles.reserve(4 * mesh.triangles().size());
  for (const auto& tri : mesh.triangles()) {
    const int m01 = midpoint.at(sorted_edge(tri[0], tri[1]));
    const int m12 = midpoint.at(sorted_edge(tri[1], tri[2]));
    const int m20 = midpoint.at(sorted_edge(tri[2], tri[0]));
    triangles.push_back({tri[0], m01, m20});
    triangles.push_back({m01, tri[1], m12});
    triangles.push_back({m20, m12, tri[2]});
    triangles.push_back({m01, m12, m20});
  }
  return TriMesh(std::move(vertices), std::move(triangles), std::move(boundary));
}

TriMesh read_mesh(std::istream& in)
{
  std::string kw_vertices;
  std::string kw_triangles;
  long long nv = -1;
  long long nt = -1;
  if (!(in >> kw_vertices >> nv >> kw_triangles >> nt) || kw_vertices != "vertices" || kw_triangles != "triangles")
    throw MeshError("mesh header must read 'vertices N triangles M'");
  if (nv <= 0 || nt <= 0) throw MeshError("mesh header counts must be positive");

  std::vector<Vec2> vertices(static_cast<std::size_t>(nv));
  std::vector<bool> boundary(static_cast<std::size_t>(nv));
  for (long long v = 0; v < nv; ++v) {
    double x = 0.0;
    double y = 0.0;
    int b = 0;
    if (!(in >> x >> y >> b) || (b != 0 && b != 1))
      throw MeshError("malformed vertex line " + std::to_string(v));
    vertices[static_cast<std::size_t>(v)] = Vec2(x, y);
    boundary[static_cast<std::size_t>(v)] = (b == 1);
  }
  std::vector<Triangle> triangles(static_cast<std::size_t>(nt));
  for (long long t = 0; t < nt; ++t) {
    auto& tri = triangles[static_cast<std::size_t>(t)];
    if (!(in >> tri[0] >> tri[1] >> tri[2])) throw MeshError("malformed triangle line " + std::to_string(t));
  }
  return TriMesh(std::move(vertices), std::move(triangles), std::move(boundary));
}

TriMesh load_mesh_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file '" + path + "'");
  return read_mesh(in);
}

void write_mesh(std::ostream& out, const TriMesh& mesh)
{
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "vertices " << mesh.num_vertices() << " triangles " << mesh.num_triangles() << '\n';
  for (int v = 0; v < mesh.num_vertices(); ++v)
    out << mesh.vertex(v).x() << ' ' << mesh.vertex(v).y() << ' ' << (mesh.is_boundary(v) ? 1 : 0) << '\n';
  for (const auto& tri : mesh.triangles()) out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
  out.precision(old_precision);
}

}  // namespace nsfem
