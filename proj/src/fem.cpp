#include "nsfem/fem.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nsfem/errors.hpp"
#include "nsfem/quadrature.hpp"

namespace nsfem {

FeSpace::FeSpace(std::shared_ptr<const TriMesh> mesh, BoundaryMode mode) : mesh_(std::move(mesh)), mode_(mode)
{
  if (!mesh_) throw std::invalid_argument("FeSpace: null mesh");
  const int nv = mesh_->num_vertices();
  dof_of_vertex_.assign(static_cast<std::size_t>(nv), -1);
  for (int v = 0; v < nv; ++v) {
    if (mode_ == BoundaryMode::dirichlet && mesh_->is_boundary(v)) continue;
    dof_of_vertex_[static_cast<std::size_t>(v)] = static_cast<int>(free_vertices_.size());
    free_vertices_.push_back(v);
  }

  elements_.reserve(static_cast<std::size_t>(mesh_->num_triangles()));
  for (int t = 0; t < mesh_->num_triangles(); ++t) {
    const auto& tri = mesh_->triangle(t);
    ElementData e;
    e.vertices = tri;
    const Vec2& p0 = mesh_->vertex(tri[0]);
    const Vec2& p1 = mesh_->vertex(tri[1]);
    const Vec2& p2 = mesh_->vertex(tri[2]);
    e.area = mesh_->area(t);
    if (!(e.area > 0.0)) throw AssemblyError("degenerate triangle with area " + std::to_string(e.area), t);
    // grad lambda_k = rot90(opposite edge) / (2|T|)
    const double inv2a = 1.0 / (2.0 * e.area);
    e.grad[0] = Vec2(p1.y() - p2.y(), p2.x() - p1.x()) * inv2a;
    e.grad[1] = Vec2(p2.y() - p0.y(), p0.x() - p2.x()) * inv2a;
    e.grad[2] = Vec2(p0.y() - p1.y(), p1.x() - p0.x()) * inv2a;
    for (int k = 0; k < 3; ++k) e.dofs[k] = dof_of_vertex_[static_cast<std::size_t>(tri[k])];
    e.centroid = (p0 + p1 + p2) / 3.0;
    elements_.push_back(e);
  }
}

Vec2 FeSpace::gradient(int t, const Vector& u) const
{
  const auto& e = element(t);
  Vec2 g = Vec2::Zero();
  for (int k = 0; k < 3; ++k)
    if (e.dofs[k] >= 0) g += u[e.dofs[k]] * e.grad[k];
  return g;
}

double FeSpace::value(int t, const std::array<double, 3>& bary, const Vector& u) const
{
  const auto& e = element(t);
  double s = 0.0;
  for (int k = 0; k < 3; ++k)
    if (e.dofs[k] >= 0) s += u[e.dofs[k]] * bary[k];
  return s;
}

double FeSpace::mean(int t, const Vector& u) const { return value(t, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, u); }

Vec2 FeSpace::point(int t, const std::array<double, 3>& bary) const
{
  const auto& e = element(t);
  return bary[0] * mesh_->vertex(e.vertices[0]) + bary[1] * mesh_->vertex(e.vertices[1]) +
         bary[2] * mesh_->vertex(e.vertices[2]);
}

void FeSpace::check_size(const Vector& u, const char* what) const
{
  if (u.size() != n_free())
    throw std::invalid_argument(std::string(what) + ": coefficient vector has length " + std::to_string(u.size()) +
                                ", space has " + std::to_string(n_free()) + " dofs");
}

std::shared_ptr<const FeSpace> make_space(TriMesh mesh, BoundaryMode mode)
{
  return std::make_shared<const FeSpace>(std::make_shared<const TriMesh>(std::move(mesh)), mode);
}

Eigen::Matrix3d local_mass(double area)
{
  Eigen::Matrix3d m;
  m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  return m * (area / 12.0);
}

Eigen::Matrix3d local_stiffness(const ElementData& e)
{
  Eigen::Matrix3d k;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) k(a, b) = e.area * e.grad[a].dot(e.grad[b]);
  return k;
}

namespace {

SparseMatrix assemble_local(const FeSpace& space, const std::function<Eigen::Matrix3d(const ElementData&)>& local)
{
  std::vector<Triplet> t;
  t.reserve(9 * static_cast<std::size_t>(space.num_elements()));
  for (const auto& e : space.elements()) {
    const Eigen::Matrix3d a = local(e);
    for (int i = 0; i < 3; ++i) {
      if (e.dofs[i] < 0) continue;
      for (int j = 0; j < 3; ++j)
        if (e.dofs[j] >= 0) t.push_back({e.dofs[i], e.dofs[j], a(i, j)});
    }
  }
  return SparseMatrix::from_triplets(space.n_free(), space.n_free(), std::move(t));
}

}  // namespace

SparseMatrix assemble_stiffness(const FeSpace& space) { return assemble_local(space, local_stiffness); }

SparseMatrix assemble_mass(const FeSpace& space)
{
  return assemble_local(space, [](const ElementData& e) { return local_mass(e.area); });
}

Vector assemble_load_pointwise(const FeSpace& space, const PointIntegrand& g, int quad_order)
{
  const auto rule = triangle_rule(quad_order);
  Vector b = Vector::Zero(space.n_free());
  for (int t = 0; t < space.num_elements(); ++t) {
    const auto& e = space.element(t);
    for (const auto& q : rule) {
      const Vec2 x = space.point(t, q.bary);
      const double value = g(t, x, q.bary);
      if (!std::isfinite(value)) throw NonFiniteError("non-finite integrand value", x.x(), x.y());
      for (int k = 0; k < 3; ++k)
        if (e.dofs[k] >= 0) b[e.dofs[k]] += e.area * q.weight * value * q.bary[k];
    }
  }
  return b;
}

Vector assemble_load(const FeSpace& space, const ScalarField& f, int quad_order)
{
  return assemble_load_pointwise(
      space, [&f](int, const Vec2& x, const std::array<double, 3>&) { return f(x); }, quad_order);
}

SparseMatrix assemble_weighted_mass(const FeSpace& space, const PointIntegrand& weight, int quad_order)
{
  const auto rule = triangle_rule(quad_order);
  return assemble_local(space, [&](const ElementData& e) {
    const int t = static_cast<int>(&e - space.elements().data());
    Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
    for (const auto& q : rule) {
      const Vec2 x = space.point(t, q.bary);
      const double w = weight(t, x, q.bary);
      if (!std::isfinite(w)) throw NonFiniteError("non-finite weight", x.x(), x.y());
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) += e.area * q.weight * w * q.bary[i] * q.bary[j];
    }
    return a;
  });
}

SparseMatrix assemble_advection(const FeSpace& space, const std::vector<Vec2>& field)
{
  if (static_cast<int>(field.size()) != space.num_elements())
    throw std::invalid_argument("assemble_advection: one vector per element required");
  return assemble_local(space, [&](const ElementData& e) {
    const auto t = static_cast<std::size_t>(&e - space.elements().data());
    Eigen::Matrix3d a;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(i, j) = e.area * field[t].dot(e.grad[j]) / 3.0;
    return a;
  });
}

CgResult solve_cg(const SparseMatrix& a, const Vector& b, const CgOptions& options)
{
  const int n = a.rows();
  if (a.cols() != n || b.size() != n) throw std::invalid_argument("solve_cg: dimension mismatch");
  const int max_iter = options.max_iter > 0 ? options.max_iter : 10 * std::max(n, 1);

  CgResult out;
  out.x = Vector::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) return out;

  const Vector diag = a.diagonal();
  Vector inv_diag(n);
  for (int i = 0; i < n; ++i) {
    if (!(diag[i] > 0.0)) throw SolverError("solve_cg: non-positive diagonal entry in row " + std::to_string(i));
    inv_diag[i] = 1.0 / diag[i];
  }

  Vector r = b;
  Vector z = inv_diag.cwiseProduct(r);
  Vector p = z;
  double rz = r.dot(z);
  double rel = 1.0;
  for (int it = 1; it <= max_iter; ++it) {
    const Vector ap = a * p;
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) throw SolverError("solve_cg: matrix is not positive definite", rel);
    const double alpha = rz / pap;
    out.x += alpha * p;
    r -= alpha * ap;
    rel = r.norm() / bnorm;
    if (rel <= options.rtol) {
      out.iterations = it;
      out.relative_residual = rel;
      return out;
    }
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw SolverError("solve_cg: no convergence after " + std::to_string(max_iter) +
                        " iterations, relative residual " + std::to_string(rel),
                    rel);
}

SolutionOperator::SolutionOperator(const FeSpace& space, double lambda, CgOptions options)
    : lambda_(lambda), options_(options)
{
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("SolutionOperator: lambda must be finite and >= 0");
  matrix_ = assemble_stiffness(space).add(assemble_mass(space), lambda);
}

Vector SolutionOperator::apply(const Vector& rhs) const { return solve_cg(matrix_, rhs, options_).x; }

Vector solve_operator_Th(const FeSpace& space, double lambda, const Vector& rhs, const CgOptions& options)
{
  space.check_size(rhs, "solve_operator_Th");
  return SolutionOperator(space, lambda, options).apply(rhs);
}

DualNorm::DualNorm(const FeSpace& space)
{
  auto factor = std::make_shared<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>(
      assemble_stiffness(space).add(assemble_mass(space)).to_eigen());
  if (factor->info() != Eigen::Success) throw SolverError("DualNorm: Cholesky factorisation of K + M failed");
  factor_ = std::move(factor);
}

Vector DualNorm::riesz(const Vector& r) const { return factor_->solve(r); }

double DualNorm::operator()(const Vector& r) const
{
  const double q = r.dot(riesz(r));
  return std::sqrt(std::max(q, 0.0));
}

Vector interpolate_nodal(const FeSpace& space, const ScalarField& g)
{
  Vector out(space.n_free());
  for (int i = 0; i < space.n_free(); ++i) {
    const Vec2& x = space.mesh().vertex(space.free_dofs()[static_cast<std::size_t>(i)]);
    const double v = g(x);
    if (!std::isfinite(v)) throw NonFiniteError("non-finite nodal value", x.x(), x.y());
    out[i] = v;
  }
  return out;
}

namespace {

void check_r(const NormSpec& spec)
{
  if ((spec.kind == NormKind::Lr || spec.kind == NormKind::W1r) && !(spec.r >= 2.0 && spec.r <= 6.0))
    throw std::invalid_argument("norm exponent r must lie in [2, 6], got " + std::to_string(spec.r));
}

double combine(NormSpec spec, double value_part, double grad_part)
{
  switch (spec.kind) {
    case NormKind::L2: return std::sqrt(value_part);
    case NormKind::H1semi: return std::sqrt(grad_part);
    case NormKind::H1: return std::sqrt(value_part + grad_part);
    case NormKind::Lr: return std::pow(value_part, 1.0 / spec.r);
    case NormKind::W1r: return std::pow(value_part + grad_part, 1.0 / spec.r);
  }
  return 0.0;
}

}  // namespace

double norm(const FeSpace& space, const Vector& u, NormSpec spec)
{
  check_r(spec);
  space.check_size(u, "norm");
  const bool quadratic = spec.kind == NormKind::L2 || spec.kind == NormKind::H1semi || spec.kind == NormKind::H1;
  double value_part = 0.0;
  double grad_part = 0.0;
  const auto rule = triangle_rule(3);
  for (int t = 0; t < space.num_elements(); ++t) {
    const auto& e = space.element(t);
    Eigen::Vector3d local;
    for (int k = 0; k < 3; ++k) local[k] = e.dofs[k] >= 0 ? u[e.dofs[k]] : 0.0;
    const Vec2 g = space.gradient(t, u);
    if (quadratic) {
      value_part += local.dot(local_mass(e.area) * local);
      grad_part += e.area * g.squaredNorm();
    } else {
      for (const auto& q : rule)
        value_part += e.area * q.weight * std::pow(std::abs(space.value(t, q.bary, u)), spec.r);
      grad_part += e.area * std::pow(g.norm(), spec.r);
    }
  }
  return combine(spec, value_part, grad_part);
}

double error_vs_exact(const FeSpace& space, const Vector& u_h, const ScalarField& u_exact,
                      const VectorField& grad_exact, NormSpec spec)
{
  check_r(spec);
  space.check_size(u_h, "error_vs_exact");
  const double p = (spec.kind == NormKind::Lr || spec.kind == NormKind::W1r) ? spec.r : 2.0;
  const auto rule = triangle_rule(3);
  double value_part = 0.0;
  double grad_part = 0.0;
  for (int t = 0; t < space.num_elements(); ++t) {
    const auto& e = space.element(t);
    const Vec2 g = space.gradient(t, u_h);
    for (const auto& q : rule) {
      const Vec2 x = space.point(t, q.bary);
      const double ev = u_exact(x) - space.value(t, q.bary, u_h);
      const Vec2 eg = grad_exact(x) - g;
      value_part += e.area * q.weight * std::pow(std::abs(ev), p);
      grad_part += e.area * q.weight * std::pow(eg.norm(), p);
    }
  }
  if (!std::isfinite(value_part) || !std::isfinite(grad_part))
    throw NonFiniteError("non-finite error integrand", 0.0, 0.0);
  return combine(spec, value_part, grad_part);
}

}  // namespace nsfem
