#ifndef NSFEM_FEM_HPP
#define NSFEM_FEM_HPP

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/SparseCholesky>

#include "nsfem/fields.hpp"
#include "nsfem/mesh.hpp"
#include "nsfem/sparse.hpp"

namespace nsfem {

/// Dirichlet elimination drops boundary vertices from the dof set; the
/// natural mode keeps every vertex (used for kernel and partition-of-unity
/// checks).
enum class BoundaryMode { dirichlet, natural };

/// Per-element data for P1 elements. `grad[k]` is the (constant) gradient
/// of the k-th barycentric coordinate; `dofs[k]` is -1 for eliminated
/// vertices.
struct ElementData {
  std::array<int, 3> vertices;
  std::array<int, 3> dofs;
  std::array<Vec2, 3> grad;
  double area;
  Vec2 centroid;
};

/// P1 Lagrange space on a TriMesh.
class FeSpace {
public:
  explicit FeSpace(std::shared_ptr<const TriMesh> mesh, BoundaryMode mode = BoundaryMode::dirichlet);

  const TriMesh& mesh() const noexcept { return *mesh_; }
  std::shared_ptr<const TriMesh> mesh_ptr() const noexcept { return mesh_; }
  BoundaryMode mode() const noexcept { return mode_; }

  int n_free() const noexcept { return static_cast<int>(free_vertices_.size()); }
  /// Vertex index of each dof.
  const std::vector<int>& free_dofs() const noexcept { return free_vertices_; }
  /// Dof index of a vertex, -1 on an eliminated boundary vertex.
  int dof_of_vertex(int v) const { return dof_of_vertex_[static_cast<std::size_t>(v)]; }

  int num_elements() const noexcept { return static_cast<int>(elements_.size()); }
  const std::vector<ElementData>& elements() const noexcept { return elements_; }
  const ElementData& element(int t) const { return elements_[static_cast<std::size_t>(t)]; }

  double h() const noexcept { return mesh_->mesh_size(); }

  /// Gradient of u_h on element t.
  Vec2 gradient(int t, const Vector& u) const;
  /// Value of u_h at a point of element t given in barycentric coordinates.
  double value(int t, const std::array<double, 3>& bary, const Vector& u) const;
  /// Mean of u_h over element t.
  double mean(int t, const Vector& u) const;
  /// Physical point of element t at barycentric coordinates.
  Vec2 point(int t, const std::array<double, 3>& bary) const;

  void check_size(const Vector& u, const char* what) const;

private:
  std::shared_ptr<const TriMesh> mesh_;
  BoundaryMode mode_;
  std::vector<int> free_vertices_;
  std::vector<int> dof_of_vertex_;
  std::vector<ElementData> elements_;
};

std::shared_ptr<const FeSpace> make_space(TriMesh mesh, BoundaryMode mode = BoundaryMode::dirichlet);

/// K[i][j] = int D phi_j . D phi_i, exact for P1.
SparseMatrix assemble_stiffness(const FeSpace& space);
/// M[i][j] = int phi_j phi_i via the exact local matrix |T| [2 1 1; 1 2 1; 1 1 2] / 12.
SparseMatrix assemble_mass(const FeSpace& space);
/// b[i] = int f phi_i with the symmetric triangle rule of the given order.
Vector assemble_load(const FeSpace& space, const ScalarField& f, int quad_order = 3);

/// Integrand evaluated at a quadrature point: element, physical point, barycentric coordinates.
using PointIntegrand = std::function<double(int, const Vec2&, const std::array<double, 3>&)>;

/// b[i] = sum_T sum_q |T| w_q g(q) lambda_i(q)
Vector assemble_load_pointwise(const FeSpace& space, const PointIntegrand& g, int quad_order = 3);
/// M_w[i][j] = sum_T sum_q |T| w_q g(q) lambda_i(q) lambda_j(q)
SparseMatrix assemble_weighted_mass(const FeSpace& space, const PointIntegrand& weight, int quad_order = 3);

/// Elementwise constant advection field b_T:
/// C[i][j] = sum_T |T| (b_T . D phi_j) / 3, i.e. int (b . D phi_j) phi_i.
SparseMatrix assemble_advection(const FeSpace& space, const std::vector<Vec2>& field);

/// Local reference matrices, exposed for tests.
Eigen::Matrix3d local_mass(double area);
Eigen::Matrix3d local_stiffness(const ElementData& e);

struct CgOptions {
  double rtol = 1e-12;
  /// Non-positive means 10 * n.
  int max_iter = 0;
};

struct CgResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients for SPD systems. Throws
/// SolverError carrying the final relative residual on the iteration cap.
CgResult solve_cg(const SparseMatrix& a, const Vector& b, const CgOptions& options = {});

/// Discrete solution operator T_h: rhs (dual coefficients) -> v_h with
/// (K + lambda M) v_h = rhs.
class SolutionOperator {
public:
  SolutionOperator(const FeSpace& space, double lambda, CgOptions options = {});

  Vector apply(const Vector& rhs) const;
  const SparseMatrix& matrix() const noexcept { return matrix_; }
  double lambda() const noexcept { return lambda_; }

private:
  SparseMatrix matrix_;
  double lambda_;
  CgOptions options_;
};

Vector solve_operator_Th(const FeSpace& space, double lambda, const Vector& rhs, const CgOptions& options = {});

/// ||r||_{(K+M)^{-1}} = sqrt(r^T (K+M)^{-1} r), the discrete H^{-1} surrogate.
class DualNorm {
public:
  explicit DualNorm(const FeSpace& space);
  double operator()(const Vector& r) const;
  /// Riesz representative (K+M)^{-1} r.
  Vector riesz(const Vector& r) const;

private:
  std::shared_ptr<const Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> factor_;
};

/// Nodal interpolant; boundary values are dropped.
Vector interpolate_nodal(const FeSpace& space, const ScalarField& g);

enum class NormKind { L2, H1semi, H1, Lr, W1r };

struct NormSpec {
  NormKind kind = NormKind::L2;
  double r = 2.0;
};

double norm(const FeSpace& space, const Vector& u, NormSpec spec);

/// Norm of u_exact - u_h, integrated with the order-3 rule.
double error_vs_exact(const FeSpace& space, const Vector& u_h, const ScalarField& u_exact,
                      const VectorField& grad_exact, NormSpec spec);

}  // namespace nsfem

#endif  // NSFEM_FEM_HPP
