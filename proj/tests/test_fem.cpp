#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "nsfem/errors.hpp"
#include "nsfem/fem.hpp"
#include "nsfem/quadrature.hpp"
#include "nsfem/rates.hpp"
#include "support.hpp"

using namespace nsfem;
using std::numbers::pi;

namespace {

double factorial(int k)
{
  return k <= 1 ? 1.0 : k * factorial(k - 1);
}

// int over the reference triangle of x^a y^b
double monomial_integral(int a, int b)
{
  return factorial(a) * factorial(b) / factorial(a + b + 2);
}

ScalarField poisson_source()
{
  return [](const Vec2& x) { return 2.0 * pi * pi * std::sin(pi * x.x()) * std::sin(pi * x.y()); };
}

}  // namespace

// ---------------------------------------------------------------- quadrature

TEST(Quadrature, ExactUpToStatedDegree)
{
  const std::array<int, 3> degree{1, 2, 4};
  for (int order = 1; order <= 3; ++order) {
    const auto rule = triangle_rule(order);
    double wsum = 0.0;
    for (const auto& q : rule) wsum += q.weight;
    EXPECT_NEAR(wsum, 1.0, 1e-15);
    for (int a = 0; a <= degree[static_cast<std::size_t>(order - 1)]; ++a)
      for (int b = 0; a + b <= degree[static_cast<std::size_t>(order - 1)]; ++b) {
        double s = 0.0;
        // reference vertices (0,0), (1,0), (0,1): x = bary[1], y = bary[2]
        for (const auto& q : rule) s += 0.5 * q.weight * std::pow(q.bary[1], a) * std::pow(q.bary[2], b);
        EXPECT_NEAR(s, monomial_integral(a, b), 1e-15) << "order " << order << " x^" << a << " y^" << b;
      }
  }
}

TEST(Quadrature, Order3IsNotExactForDegreeFive)
{
  double s = 0.0;
  for (const auto& q : triangle_rule(3)) s += 0.5 * q.weight * std::pow(q.bary[1], 5);
  EXPECT_GT(std::abs(s - monomial_integral(5, 0)), 1e-8);
}

TEST(Quadrature, RejectsUnknownOrder)
{
  EXPECT_THROW(triangle_rule(0), std::invalid_argument);
  EXPECT_THROW(triangle_rule(4), std::invalid_argument);
}

// ---------------------------------------------------------------- sparse

TEST(SparseMatrix, FromTripletsSumsDuplicates)
{
  const auto a = SparseMatrix::from_triplets(2, 3, {{0, 2, 1.0}, {1, 0, 2.0}, {0, 2, 0.5}, {0, 0, -1.0}});
  EXPECT_EQ(a.nnz(), 3);
  EXPECT_DOUBLE_EQ(a.coeff(0, 2), 1.5);
  EXPECT_DOUBLE_EQ(a.coeff(1, 1), 0.0);
  const Eigen::MatrixXd d = a.to_dense();
  EXPECT_TRUE(a.transpose().to_dense().isApprox(d.transpose()));
  const Vector x = Vector::LinSpaced(3, 1.0, 3.0);
  EXPECT_TRUE((a * x).isApprox(d * x));
}

TEST(SparseMatrix, RejectsUnsortedColumns)
{
  EXPECT_THROW(SparseMatrix(1, 3, {0, 2}, {2, 1}, {1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(SparseMatrix(1, 3, {0, 2}, {1, 1}, {1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), std::invalid_argument);
}

TEST(SparseMatrix, MatrixMarketIsOneBased)
{
  std::ostringstream out;
  write_matrix_market(out, SparseMatrix::from_triplets(2, 2, {{1, 0, 0.25}}));
  EXPECT_EQ(out.str(), "%%MatrixMarket matrix coordinate real general\n2 2 1\n2 1 0.25\n");
}

// ---------------------------------------------------------------- stiffness / mass

TEST(Stiffness, ConstantsInKernelWithoutElimination)
{
  auto space = make_space(unit_square_mesh(4), BoundaryMode::natural);
  const Vector k1 = assemble_stiffness(*space) * Vector::Ones(space->n_free());
  EXPECT_LT(k1.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Stiffness, InteriorDiagonalOnTwoByTwo)
{
  auto space = make_space(unit_square_mesh(2));
  ASSERT_EQ(space->n_free(), 1);
  EXPECT_NEAR(assemble_stiffness(*space).coeff(0, 0), 4.0, 1e-14);
}

TEST(Stiffness, ExactlySymmetric)
{
  const Eigen::MatrixXd k = assemble_stiffness(*make_space(refine_uniform(unit_square_mesh(3)))).to_dense();
  EXPECT_EQ((k - k.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Stiffness, ElementGradientsSumToZero)
{
  auto space = make_space(unit_square_mesh(3));
  for (const auto& e : space->elements()) EXPECT_LT((e.grad[0] + e.grad[1] + e.grad[2]).norm(), 1e-13);
}

TEST(Mass, FullMatrixSumsToArea)
{
  auto space = make_space(unit_square_mesh(4), BoundaryMode::natural);
  EXPECT_NEAR(assemble_mass(*space).to_dense().sum(), 1.0, 1e-14);
}

TEST(Mass, ReferenceElementMatrix)
{
  Eigen::Matrix3d expected;
  expected << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  expected *= 0.5 / 12.0;
  EXPECT_TRUE(local_mass(0.5).isApprox(expected, 1e-15));

  // cross-check against the order-3 rule, which is exact for products of barycentrics
  Eigen::Matrix3d quad = Eigen::Matrix3d::Zero();
  for (const auto& q : triangle_rule(3))
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        quad(i, j) += 0.5 * q.weight * q.bary[static_cast<std::size_t>(i)] * q.bary[static_cast<std::size_t>(j)];
  EXPECT_TRUE(quad.isApprox(expected, 1e-14));
}

TEST(Mass, PositiveEigenvalues)
{
  const Eigen::MatrixXd m = assemble_mass(*make_space(unit_square_mesh(4))).to_dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
}

TEST(LinearOperator, PositiveOnRandomVectors)
{
  std::mt19937_64 rng(3);
  for (int n : {2, 5, 8}) {
    auto space = make_space(unit_square_mesh(n));
    for (double lambda : {0.0, 1.0, 10.0}) {
      const SparseMatrix a = assemble_stiffness(*space).add(assemble_mass(*space), lambda);
      for (int k = 0; k < 100; ++k) {
        const Vector x = test::random_vector(rng, space->n_free());
        EXPECT_GT(x.dot(a * x), 0.0);
      }
    }
  }
}

// ---------------------------------------------------------------- load

TEST(Load, ZeroSource)
{
  auto space = make_space(unit_square_mesh(4));
  for (int order = 1; order <= 3; ++order) EXPECT_TRUE(assemble_load(*space, constant_field(0.0), order).isZero(0.0));
}

TEST(Load, UnitSourceMatchesMassRowSums)
{
  const TriMesh mesh = unit_square_mesh(4);
  auto full = make_space(mesh, BoundaryMode::natural);
  auto space = make_space(mesh);
  const Vector rows = assemble_mass(*full) * Vector::Ones(full->n_free());
  const Vector b = assemble_load(*space, constant_field(1.0));
  for (int i = 0; i < space->n_free(); ++i)
    EXPECT_NEAR(b[i], rows[space->free_dofs()[static_cast<std::size_t>(i)]], 1e-15);
}

TEST(Load, AffineSourceExactFromOrderTwo)
{
  auto space = make_space(unit_square_mesh(2));
  const ScalarField f = [](const Vec2& x) { return x.x(); };
  const Vector b2 = assemble_load(*space, f, 2);
  const Vector b3 = assemble_load(*space, f, 3);
  EXPECT_LT((b2 - b3).cwiseAbs().maxCoeff(), 1e-15);
  // M * interpolant is exact for affine f on the full space
  auto full = make_space(unit_square_mesh(2), BoundaryMode::natural);
  const Vector exact = assemble_mass(*full) * interpolate_nodal(*full, f);
  EXPECT_NEAR(b3[0], exact[4], 1e-15);
}

TEST(Load, NonFiniteSourceReportsPoint)
{
  auto space = make_space(unit_square_mesh(2));
  const ScalarField f = [](const Vec2& x) { return x.x() > 0.5 ? std::nan("") : 1.0; };
  try {
    assemble_load(*space, f);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_GT(e.x(), 0.5);
  }
}

// ---------------------------------------------------------------- solution operator

TEST(SolutionOperator, ZeroRhs)
{
  auto space = make_space(unit_square_mesh(6));
  EXPECT_TRUE(solve_operator_Th(*space, 1.0, Vector::Zero(space->n_free())).isZero(0.0));
}

TEST(SolutionOperator, ResidualBelowTolerance)
{
  std::mt19937_64 rng(11);
  auto space = make_space(unit_square_mesh(16));
  const SparseMatrix a = assemble_stiffness(*space).add(assemble_mass(*space), 0.5);
  const Vector rhs = test::random_vector(rng, space->n_free());
  const CgResult r = solve_cg(a, rhs);
  EXPECT_LE((a * r.x - rhs).norm(), 1e-12 * rhs.norm());
  EXPECT_LE(r.relative_residual, 1e-12);
}

TEST(SolutionOperator, IterationCapCarriesResidual)
{
  auto space = make_space(unit_square_mesh(16));
  const Vector rhs = assemble_load(*space, constant_field(1.0));
  try {
    solve_operator_Th(*space, 0.0, rhs, {1e-12, 2});
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_GT(e.residual(), 1e-12);
  }
}

TEST(SolutionOperator, LargeReactionLimit)
{
  auto space = make_space(unit_square_mesh(8));
  const Vector rhs = assemble_load(*space, constant_field(1.0));
  const double lambda = 1e8;
  const Vector v = solve_operator_Th(*space, lambda, rhs);
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> mass(assemble_mass(*space).to_eigen());
  const Vector limit = mass.solve(rhs) / lambda;
  EXPECT_LT((v - limit).norm(), 1e-5 * limit.norm());
  EXPECT_LT(v.norm() * lambda, 2.0 * mass.solve(rhs).norm());
}

TEST(SolutionOperator, PoissonRates)
{
  const auto exact = sinsin_solution();
  std::vector<double> hs, l2, h1, interp;
  for (int n : {8, 16, 32}) {
    auto space = make_space(unit_square_mesh(n));
    const Vector u = solve_operator_Th(*space, 0.0, assemble_load(*space, poisson_source()));
    hs.push_back(space->h());
    l2.push_back(error_vs_exact(*space, u, exact.value, exact.gradient, {NormKind::L2}));
    h1.push_back(error_vs_exact(*space, u, exact.value, exact.gradient, {NormKind::H1}));
    interp.push_back(
        error_vs_exact(*space, interpolate_nodal(*space, exact.value), exact.value, exact.gradient, {NormKind::H1}));
    // Galerkin: best approximation up to a modest constant
    EXPECT_LE(h1.back(), 5.0 * interp.back());
  }
  EXPECT_NEAR(fit_rate(hs, l2).slope, 2.0, 0.1);
  EXPECT_NEAR(fit_rate(hs, h1).slope, 1.0, 0.1);
  EXPECT_NEAR(fit_rate(hs, interp).slope, 1.0, 0.1);
  for (std::size_t i = 1; i < hs.size(); ++i) {
    EXPECT_NEAR(l2[i - 1] / l2[i], 4.0, 0.4);
    EXPECT_NEAR(h1[i - 1] / h1[i], 2.0, 0.2);
  }
}

// ---------------------------------------------------------------- interpolation

TEST(Interpolation, ZeroField)
{
  auto space = make_space(unit_square_mesh(4));
  EXPECT_TRUE(interpolate_nodal(*space, constant_field(0.0)).isZero(0.0));
}

TEST(Interpolation, ReproducesDiscreteFunctions)
{
  std::mt19937_64 rng(5);
  const int n = 6;
  auto space = make_space(unit_square_mesh(n));
  for (int trial = 0; trial < 10; ++trial) {
    const Vector u = test::random_vector(rng, space->n_free());
    const test::GridFunction g(*space, n, u);
    EXPECT_LT((interpolate_nodal(*space, g.as_field()) - u).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Interpolation, NonFiniteRejected)
{
  auto space = make_space(unit_square_mesh(4));
  EXPECT_THROW(interpolate_nodal(*space, constant_field(std::numeric_limits<double>::infinity())), NonFiniteError);
}

// ---------------------------------------------------------------- norms

TEST(Norms, ZeroVector)
{
  auto space = make_space(unit_square_mesh(4));
  const Vector z = Vector::Zero(space->n_free());
  for (auto kind : {NormKind::L2, NormKind::H1semi, NormKind::H1, NormKind::Lr, NormKind::W1r})
    for (double r : {2.0, 3.5, 6.0}) EXPECT_EQ(norm(*space, z, {kind, r}), 0.0);
}

TEST(Norms, QuadraticFormsMatchQuadrature)
{
  std::mt19937_64 rng(9);
  auto space = make_space(unit_square_mesh(8));
  const SparseMatrix m = assemble_mass(*space);
  const SparseMatrix k = assemble_stiffness(*space);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector u = test::random_vector(rng, space->n_free());
    const double l2 = norm(*space, u, {NormKind::L2});
    EXPECT_NEAR(l2 * l2, u.dot(m * u), 1e-14 * u.dot(m * u));
    EXPECT_NEAR(norm(*space, u, {NormKind::Lr, 2.0}), l2, 1e-14 * l2);
    const double semi = norm(*space, u, {NormKind::H1semi});
    EXPECT_NEAR(semi * semi, u.dot(k * u), 1e-12 * u.dot(k * u));
    EXPECT_NEAR(norm(*space, u, {NormKind::W1r, 2.0}), norm(*space, u, {NormKind::H1}), 1e-12);
  }
}

TEST(Norms, LrMonotoneInExponentOnUnitDomain)
{
  std::mt19937_64 rng(10);
  auto space = make_space(unit_square_mesh(8));
  const Vector u = test::random_vector(rng, space->n_free());
  double previous = 0.0;
  for (double r : {2.0, 3.0, 4.0, 5.0, 6.0}) {
    const double v = norm(*space, u, {NormKind::Lr, r});
    EXPECT_GE(v, previous);
    previous = v;
  }
}

TEST(Norms, RejectsExponentOutsideRange)
{
  auto space = make_space(unit_square_mesh(4));
  const Vector z = Vector::Zero(space->n_free());
  EXPECT_THROW(norm(*space, z, {NormKind::Lr, 1.5}), std::invalid_argument);
  EXPECT_THROW(norm(*space, z, {NormKind::W1r, 7.0}), std::invalid_argument);
  const auto ex = sinsin_solution();
  EXPECT_THROW(error_vs_exact(*space, z, ex.value, ex.gradient, {NormKind::Lr, 1.0}), std::invalid_argument);
}

TEST(ErrorVsExact, ZeroAgainstZero)
{
  auto space = make_space(unit_square_mesh(4));
  const VectorField zero_grad = [](const Vec2&) { return Vec2::Zero().eval(); };
  for (auto kind : {NormKind::L2, NormKind::H1, NormKind::W1r})
    EXPECT_EQ(error_vs_exact(*space, Vector::Zero(space->n_free()), constant_field(0.0), zero_grad, {kind, 4.0}), 0.0);
}

TEST(ErrorVsExact, DiscreteExactSolutionIsReproduced)
{
  std::mt19937_64 rng(12);
  const int n = 5;
  auto space = make_space(unit_square_mesh(n));
  const Vector u = test::random_vector(rng, space->n_free());
  const test::GridFunction g(*space, n, u);
  for (auto kind : {NormKind::L2, NormKind::H1, NormKind::Lr, NormKind::W1r})
    EXPECT_LE(error_vs_exact(*space, u, g.as_field(), g.as_gradient(), {kind, 4.0}), 1e-12);
}

TEST(ErrorVsExact, AgreesWithNormOfDifference)
{
  // for a discrete "exact" solution the error equals the norm of the coefficient difference
  std::mt19937_64 rng(13);
  const int n = 6;
  auto space = make_space(unit_square_mesh(n));
  const Vector u = test::random_vector(rng, space->n_free());
  const Vector v = test::random_vector(rng, space->n_free());
  const test::GridFunction g(*space, n, u);
  for (auto kind : {NormKind::L2, NormKind::H1}) {
    const double direct = norm(*space, u - v, {kind});
    EXPECT_NEAR(error_vs_exact(*space, v, g.as_field(), g.as_gradient(), {kind}), direct, 1e-12 * direct);
  }
}

TEST(DualNorm, MatchesDenseFormula)
{
  std::mt19937_64 rng(14);
  auto space = make_space(unit_square_mesh(6));
  const Eigen::MatrixXd g = assemble_stiffness(*space).add(assemble_mass(*space)).to_dense();
  const DualNorm dual(*space);
  const Vector r = test::random_vector(rng, space->n_free());
  EXPECT_NEAR(dual(r), std::sqrt(r.dot(g.ldlt().solve(r))), 1e-12);
}
