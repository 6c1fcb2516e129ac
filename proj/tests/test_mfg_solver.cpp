#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "nsfem/coupling.hpp"
#include "nsfem/mesh.hpp"
#include "nsfem/mfg_solver.hpp"
#include "support.hpp"

using namespace nsfem;

namespace {

MfgProblem bump_problem(int n, HamiltonianModel model, CouplingModel coupling, double lambda = 1.0)
{
  MfgData data;
  data.m0 = bump_field();
  return MfgProblem(make_space(unit_square_mesh(n)), std::move(model), std::move(coupling), lambda, data);
}

MfgProblem manufactured(int n, HamiltonianModel model, CouplingModel coupling, double lambda = 1.0)
{
  const auto s = sinsin_solution();
  MfgData data = mfg_manufactured_data(s, s, model, coupling, lambda);
  return MfgProblem(make_space(unit_square_mesh(n)), std::move(model), std::move(coupling), lambda, data);
}

double mass_of(const MfgProblem& p, const Vector& m)
{
  return Vector::Ones(m.size()).dot(p.mass() * m);
}

}  // namespace

TEST(MfgResidual, ZeroDataZeroState)
{
  MfgData data;
  data.manufactured = true;
  const MfgProblem p(make_space(unit_square_mesh(4)), huber_model(1.0), linear_coupling(), 1.0, data);
  const Vector z = Vector::Zero(p.space().n_free());
  const MfgResidual r = mfg_residual(p, {z, z});
  EXPECT_TRUE(r.ru.isZero(0.0));
  EXPECT_TRUE(r.rm.isZero(0.0));
}

TEST(MfgResidual, ZeroCouplingSplitsIntoHjAndLinearFp)
{
  const MfgProblem p = bump_problem(6, huber_model(0.2), zero_coupling());
  std::mt19937_64 rng(5);
  const int n = p.space().n_free();
  const Vector u = test::random_vector(rng, n, 0.3);
  const Vector m1 = test::random_vector(rng, n);
  const Vector m2 = test::random_vector(rng, n);
  // HJB row ignores m entirely
  EXPECT_EQ(mfg_residual(p, {u, m1}).ru, mfg_residual(p, {u, m2}).ru);
  // FP row is affine in m
  const Vector r0 = mfg_residual(p, {u, Vector::Zero(n)}).rm;
  const Vector r1 = mfg_residual(p, {u, m1}).rm;
  const Vector r2 = mfg_residual(p, {u, m2}).rm;
  const Vector r12 = mfg_residual(p, {u, m1 + m2}).rm;
  EXPECT_LT((r12 - r1 - r2 + r0).norm(), 1e-12 * (1.0 + r12.norm()));
}

TEST(MfgResidual, InterpolantOfManufacturedPairIsSmall)
{
  const auto s = sinsin_solution();
  std::vector<double> res;
  for (int n : {8, 16, 32}) {
    const MfgProblem p = manufactured(n, huber_model(1.0), linear_coupling());
    const Vector i = interpolate_nodal(p.space(), s.value);
    res.push_back(mfg_residual_norm(p, mfg_residual(p, {i, i})));
  }
  EXPECT_LT(res[1], 0.7 * res[0]);
  EXPECT_LT(res[2], 0.7 * res[1]);
  EXPECT_LT(res[2], 0.05);
}

TEST(MfgNewton, DecoupledZeroModelOneStep)
{
  const MfgProblem p = bump_problem(10, zero_model(), zero_coupling());
  const MfgSolveReport r = mfg_newton(p, default_initial_state(p));
  ASSERT_TRUE(r.converged) << r.message;
  EXPECT_EQ(r.iterations, 1);
}

TEST(MfgNewton, MonotoneHuberConvergesQuickly)
{
  const MfgProblem p = bump_problem(16, huber_model(1.0), linear_coupling());
  const MfgSolveReport r = mfg_newton(p, default_initial_state(p), {1e-9, 25, 10});
  ASSERT_TRUE(r.converged) << r.message;
  EXPECT_LE(r.iterations, 25);
  EXPECT_LE(r.final_residual(), 1e-9);
  EXPECT_EQ(r.residual_history.size(), static_cast<std::size_t>(r.iterations + 1));
  EXPECT_GT(mass_of(p, r.solution.m), 0.0);
}

TEST(MfgNewton, SmallHuberManufacturedConverges)
{
  const MfgProblem p = manufactured(16, huber_model(0.2), linear_coupling());
  const int n = p.space().n_free();
  const MfgSolveReport r = mfg_newton(p, {Vector::Zero(n), Vector::Zero(n)}, {1e-9, 50, 10});
  ASSERT_TRUE(r.converged) << r.message;
}

TEST(MfgProblem, RejectsHamiltonianWithoutHp)
{
  MfgData data;
  data.m0 = bump_field();
  EXPECT_ANY_THROW(MfgProblem(make_space(unit_square_mesh(4)), eikonal_model(), linear_coupling(), 1.0, data));
}

TEST(MfgPicard, AgreesWithNewton)
{
  const MfgProblem p = bump_problem(12, huber_model(1.0), linear_coupling());
  const double tol = 1e-9;
  const MfgSolveReport newton = mfg_newton(p, default_initial_state(p), {tol, 50, 10});
  const MfgSolveReport picard = mfg_picard(p, default_initial_state(p), {tol, 500, 0.5, 0.0});
  ASSERT_TRUE(newton.converged);
  ASSERT_TRUE(picard.converged) << picard.message;
  const double du = norm(p.space(), newton.solution.u - picard.solution.u, {NormKind::H1});
  const double dm = norm(p.space(), newton.solution.m - picard.solution.m, {NormKind::L2});
  EXPECT_LE(du + dm, 10 * tol);
}

TEST(MfgPicard, ZeroCouplingOneOuterStepWithFullRelaxation)
{
  const MfgProblem p = bump_problem(8, huber_model(1.0), zero_coupling());
  const MfgSolveReport r = mfg_picard(p, default_initial_state(p), {1e-9, 10, 1.0, 0.0});
  ASSERT_TRUE(r.converged) << r.message;
  EXPECT_EQ(r.iterations, 1);
}

TEST(MfgPicard, AntiMonotoneCouplingReportsInsteadOfThrowing)
{
  const MfgProblem p = bump_problem(8, huber_model(1.0), linear_coupling(-5.0));
  MfgSolveReport r;
  EXPECT_NO_THROW(r = mfg_picard(p, default_initial_state(p), {1e-9, 30, 1.0, 0.0}));
  if (!r.converged) EXPECT_FALSE(r.message.empty());
}

TEST(MfgJacobian, MatchesFiniteDifferences)
{
  std::mt19937_64 rng(31);
  for (const auto& coupling : {linear_coupling(2.0), arctan_coupling(), nonlocal_coupling(arctan_coupling())}) {
    const MfgProblem p = bump_problem(8, huber_model(0.05), coupling);
    const int n = p.space().n_free();
    // amplitude 2 puts every free element on the outer branch, away from |Du| = 0.05
    const ScalarField skew = [](const Vec2& x) {
      return 2.0 * std::sin(M_PI * x.x()) * std::sin(M_PI * x.y()) * (1.0 + 0.7 * x.x() + 1.9 * x.y() * x.y());
    };
    const MfgState s{interpolate_nodal(p.space(), skew), p.m0() + test::random_vector(rng, n, 0.1)};
    const MfgJacobian j = mfg_jacobian(p, s);
    const MfgResidual r0 = mfg_residual(p, s);
    const double eps = 1e-6;
    for (int k = 0; k < 10; ++k) {
      const Vector wu = test::random_vector(rng, n);
      const Vector wm = test::random_vector(rng, n);
      const MfgResidual r1 = mfg_residual(p, {s.u + eps * wu, s.m + eps * wm});
      Vector fd(2 * n), w(2 * n);
      fd << (r1.ru - r0.ru) / eps, (r1.rm - r0.rm) / eps;
      w << wu, wm;
      const Vector jw = j.apply(w);
      EXPECT_LE((fd - jw).norm(), 1e-5 * jw.norm()) << coupling.name;
    }
  }
}

TEST(MfgJacobian, SolveInvertsApply)
{
  std::mt19937_64 rng(8);
  const MfgProblem p = bump_problem(8, huber_model(1.0), nonlocal_coupling(linear_coupling()));
  const MfgState s = default_initial_state(p);
  const MfgJacobian j = mfg_jacobian(p, s);
  const Vector x = test::random_vector(rng, j.size());
  EXPECT_LT((j.solve(j.apply(x)) - x).norm(), 1e-10 * x.norm());
  const Eigen::MatrixXd d = j.to_dense();
  EXPECT_LT((d * x - j.apply(x)).norm(), 1e-12 * x.norm());
  EXPECT_LT((d.transpose() * j.solve_transpose(x) - x).norm(), 1e-10 * x.norm());
}

TEST(MfgJacobian, AdjointAdvectionTermIsNonnegativeAtMonotoneSolution)
{
  // v^T (int m xi Dv . Dv) >= 0 needs m >= 0; without stabilisation m_h may dip
  // slightly below zero, in which case the check is skipped
  std::mt19937_64 rng(12);
  for (const auto& model : {huber_model(1.0), huber_model(0.2)}) {
    const MfgProblem p = bump_problem(12, model, linear_coupling());
    const MfgSolveReport r = mfg_newton(p, default_initial_state(p), {1e-10, 50, 10});
    ASSERT_TRUE(r.converged) << r.message;
    if (r.solution.m.minCoeff() < -1e-8) GTEST_SKIP() << "min m_h = " << r.solution.m.minCoeff();
    const MfgJacobian j = mfg_jacobian(p, r.solution);
    for (int k = 0; k < 100; ++k) {
      const Vector v = test::random_vector(rng, p.space().n_free());
      // block_mu is the weak form of -div(m xi Dv); testing against v gives the quadratic form
      EXPECT_GE(v.dot(j.block_mu() * v), -1e-12 * v.squaredNorm()) << model.name();
    }
  }
}

TEST(CheckMonotonicity, LinearAndArctan)
{
  auto space = make_space(unit_square_mesh(6));
  std::mt19937_64 rng(3);
  std::vector<Vector> samples{interpolate_nodal(*space, bump_field())};
  for (int k = 0; k < 5; ++k) samples.push_back(test::random_vector(rng, space->n_free(), 3.0));
  const auto pos = check_monotonicity(linear_coupling(1.0), *space, samples);
  EXPECT_TRUE(pos.monotone);
  EXPECT_GT(pos.margin, 0.0);
  EXPECT_GE(pos.min_sampled_quotient, pos.margin);
  const auto neg = check_monotonicity(linear_coupling(-1.0), *space, samples);
  EXPECT_FALSE(neg.monotone);
  EXPECT_LT(neg.margin, 0.0);
  // arctan' = 1/(1+m^2) > 0
  const auto at = check_monotonicity(arctan_coupling(), *space, samples);
  EXPECT_TRUE(at.monotone);
  EXPECT_GT(at.margin, 0.0);
  EXPECT_LT(at.margin, pos.margin);
}

TEST(CheckMonotonicity, MarginIsSmallestMassEigenvalueForLinear)
{
  auto space = make_space(unit_square_mesh(4));
  const std::vector<Vector> samples{Vector::Zero(space->n_free())};
  const Eigen::MatrixXd m = assemble_mass(*space).to_dense();
  const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues()(0);
  EXPECT_NEAR(check_monotonicity(linear_coupling(2.0), *space, samples).margin, 2.0 * lmin, 1e-12);
}

TEST(Smoother, PreservesConstantsAndContracts)
{
  auto space = make_space(unit_square_mesh(8), BoundaryMode::natural);
  const Smoother s(*space, 2, 1.0);
  const Vector one = Vector::Ones(space->n_free());
  // (M_L + sigma K) 1 = M_L 1 = M 1, so constants are fixed
  EXPECT_LT((s.apply(one) - one).cwiseAbs().maxCoeff(), 1e-12);
  std::mt19937_64 rng(4);
  const Vector v = test::random_vector(rng, space->n_free());
  const Vector w = s.apply(v);
  const Eigen::MatrixXd k = assemble_stiffness(*space).to_dense();
  EXPECT_LT(w.dot(k * w), v.dot(k * v));
}

TEST(MfgNonlocal, NewtonConverges)
{
  const MfgProblem p = bump_problem(12, huber_model(1.0), nonlocal_coupling(linear_coupling()));
  const MfgSolveReport r = mfg_newton(p, default_initial_state(p), {1e-9, 30, 10});
  ASSERT_TRUE(r.converged) << r.message;
  EXPECT_GT(mass_of(p, r.solution.m), 0.0);
}

TEST(MfgStudy, HuberLinearRates)
{
  const auto s = sinsin_solution();
  MfgStudyConfig cfg;
  cfg.levels = {8, 16, 32};
  const ConvergenceReport rep = convergence_study_mfg(huber_model(1.0), linear_coupling(), s, s, cfg);
  ASSERT_TRUE(rep.all_converged());
  EXPECT_TRUE(rep.strictly_decreasing("H1xL2"));
  EXPECT_GE(rep.rates.at("H1xL2").slope, 0.9);
  EXPECT_GE(rep.rates.at("W1rxLr").slope, 0.25);
  EXPECT_GE(rep.rates.at("L2_m").slope, 1.5);
}
