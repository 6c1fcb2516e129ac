#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "nsfem/cli.hpp"
#include "nsfem/coupling.hpp"
#include "nsfem/diagnostics.hpp"
#include "nsfem/fem.hpp"
#include "nsfem/hamiltonian.hpp"
#include "nsfem/hj_solver.hpp"
#include "nsfem/mesh.hpp"
#include "nsfem/mfg_solver.hpp"

namespace nsfem::cli {

namespace {

struct Check {
  std::string name;
  std::function<bool()> body;
};

bool near(double a, double b, double tol = 1e-12)
{
  return std::abs(a - b) <= tol;
}

std::vector<Check> checks()
{
  std::vector<Check> list;
  list.push_back({"mesh n=1 has 4 vertices, 2 triangles, h=sqrt(2)", [] {
                    const TriMesh m = unit_square_mesh(1);
                    return m.num_vertices() == 4 && m.num_triangles() == 2 && near(m.mesh_size(), std::sqrt(2.0));
                  }});
  list.push_back({"mesh n=4 covers unit area", [] { return near(unit_square_mesh(4).total_area(), 1.0); }});
  list.push_back({"refined n=1 mesh has 8 triangles, h=sqrt(2)/2", [] {
                    const TriMesh m = refine_uniform(unit_square_mesh(1));
                    return m.num_triangles() == 8 && near(m.mesh_size(), std::sqrt(0.5));
                  }});
  list.push_back({"stiffness annihilates constants", [] {
                    auto space = make_space(unit_square_mesh(4), BoundaryMode::natural);
                    return (assemble_stiffness(*space) * Vector::Ones(space->n_free())).cwiseAbs().maxCoeff() < 1e-13;
                  }});
  list.push_back({"stiffness is symmetric", [] {
                    const Eigen::MatrixXd k = assemble_stiffness(*make_space(unit_square_mesh(4))).to_dense();
                    return (k - k.transpose()).cwiseAbs().maxCoeff() == 0.0;
                  }});
  list.push_back({"full mass matrix sums to the area", [] {
                    auto space = make_space(unit_square_mesh(4), BoundaryMode::natural);
                    return near(assemble_mass(*space).to_dense().sum(), 1.0);
                  }});
  list.push_back({"zero source gives zero load", [] {
                    auto space = make_space(unit_square_mesh(4));
                    return assemble_load(*space, constant_field(0.0)).isZero(0.0);
                  }});
  list.push_back({"T_h maps zero to zero", [] {
                    auto space = make_space(unit_square_mesh(4));
                    return solve_operator_Th(*space, 1.0, Vector::Zero(space->n_free())).isZero(0.0);
                  }});
  list.push_back({"interpolation reproduces a hat function", [] {
                    auto space = make_space(unit_square_mesh(4));
                    const Vec2 c(0.5, 0.5);
                    const ScalarField hat = [&](const Vec2& x) {
                      return (x - c).cwiseAbs().maxCoeff() < 1e-12 ? 1.0 : 0.0;
                    };
                    const Vector v = interpolate_nodal(*space, hat);
                    return near(v.sum(), 1.0) && near(v.maxCoeff(), 1.0);
                  }});
  list.push_back({"norms of zero vanish", [] {
                    auto space = make_space(unit_square_mesh(4));
                    const Vector z = Vector::Zero(space->n_free());
                    for (NormKind k : {NormKind::L2, NormKind::H1semi, NormKind::H1, NormKind::Lr, NormKind::W1r})
                      if (norm(*space, z, {k, 4.0}) != 0.0) return false;
                    return true;
                  }});
  list.push_back({"eikonal at (3,4): H=5, selection (0.6,0.8)", [] {
                    const HamiltonianModel h = eikonal_model();
                    const Vec2 s = h.clarke_selection(Vec2::Zero(), Vec2(3, 4));
                    return near(h(Vec2::Zero(), Vec2(3, 4)), 5.0) && near(s.x(), 0.6) && near(s.y(), 0.8);
                  }});
  list.push_back({"huber(1) at 0: H=0, H_p=0, Jacobian I", [] {
                    const HamiltonianModel h = huber_model(1.0);
                    return h(Vec2::Zero(), Vec2::Zero()) == 0.0 && h.hp(Vec2::Zero(), Vec2::Zero()).isZero(0.0) &&
                           h.hp_selection(Vec2::Zero(), Vec2::Zero()).isIdentity(0.0);
                  }});
  list.push_back({"zero model has zero mean-value matrix", [] {
                    return mean_value_matrix(zero_model(), Vec2::Zero(), Vec2(1, 2), Vec2(-3, 0.5)).isZero(0.0);
                  }});
  list.push_back({"eikonal selection at u=0 is zero", [] {
                    auto space = make_space(unit_square_mesh(4));
                    for (const Vec2& xi : selection_field(eikonal_model(), *space, Vector::Zero(space->n_free())))
                      if (!xi.isZero(0.0)) return false;
                    return true;
                  }});
  list.push_back({"zero model: Newton takes one step", [] {
                    auto space = make_space(unit_square_mesh(8));
                    const HjProblem p = HjProblem::from_source(space, zero_model(), 1.0, constant_field(1.0));
                    const SolveReport r = solve_newton(p, Vector::Zero(space->n_free()));
                    return r.converged && r.iterations == 1;
                  }});
  list.push_back({"zero model: Picard with theta=1 takes one step", [] {
                    auto space = make_space(unit_square_mesh(8));
                    const HjProblem p = HjProblem::from_source(space, zero_model(), 1.0, constant_field(1.0));
                    const SolveReport r = solve_picard(p, Vector::Zero(space->n_free()), {1e-10, 10, 1.0});
                    return r.converged && r.iterations == 1;
                  }});
  list.push_back({"MFG residual vanishes for zero data", [] {
                    auto space = make_space(unit_square_mesh(4));
                    MfgData data;
                    data.manufactured = true;
                    const MfgProblem p(space, zero_model(), zero_coupling(), 1.0, data);
                    const MfgState s{Vector::Zero(space->n_free()), Vector::Zero(space->n_free())};
                    const MfgResidual r = mfg_residual(p, s);
                    return r.ru.isZero(0.0) && r.rm.isZero(0.0);
                  }});
  list.push_back({"decoupled MFG: Newton takes one step", [] {
                    auto space = make_space(unit_square_mesh(8));
                    MfgData data;
                    data.m0 = bump_field();
                    data.g_hjb = constant_field(1.0);
                    const MfgProblem p(space, zero_model(), zero_coupling(), 1.0, data);
                    const MfgSolveReport r = mfg_newton(p, default_initial_state(p));
                    return r.converged && r.iterations == 1;
                  }});
  list.push_back({"zero coupling: Picard with theta=1 takes one outer step", [] {
                    auto space = make_space(unit_square_mesh(8));
                    MfgData data;
                    data.m0 = bump_field();
                    const MfgProblem p(space, huber_model(1.0), zero_coupling(), 1.0, data);
                    const MfgSolveReport r = mfg_picard(p, default_initial_state(p), {1e-9, 10, 1.0, 0.0});
                    return r.converged && r.iterations == 1;
                  }});
  list.push_back({"f(m)=m is monotone, f(m)=-m is not", [] {
                    auto space = make_space(unit_square_mesh(4));
                    const std::vector<Vector> samples{interpolate_nodal(*space, bump_field())};
                    return check_monotonicity(linear_coupling(1.0), *space, samples).monotone &&
                           !check_monotonicity(linear_coupling(-1.0), *space, samples).monotone;
                  }});
  list.push_back({"Banach constant of the identity is 1", [] {
                    return near(banach_constant(Eigen::MatrixXd::Identity(5, 5), GramPair::identity(5, 5)), 1.0);
                  }});
  list.push_back({"perturbation by zero has zero slack", [] {
                    const Eigen::MatrixXd t = Eigen::MatrixXd::Identity(4, 4);
                    return perturbation_check(t, Eigen::MatrixXd::Zero(4, 4), GramPair::identity(4, 4)).slack == 0.0;
                  }});
  list.push_back({"I - 0.3 I has constant 0.7", [] {
                    const Eigen::MatrixXd t = Eigen::MatrixXd::Identity(4, 4);
                    const auto r = perturbation_check(t, -0.3 * t, GramPair::identity(4, 4));
                    return near(r.constant_ts, 0.7) && r.holds;
                  }});
  list.push_back({"fit_rate recovers slopes 1 and 2", [] {
                    const std::vector<double> hs{0.5, 0.25, 0.125, 0.0625};
                    std::vector<double> sq;
                    for (double h : hs) sq.push_back(h * h);
                    return near(fit_rate(hs, hs).slope, 1.0) && near(fit_rate(hs, sq).slope, 2.0);
                  }});
  return list;
}

}  // namespace

int run_selftest(std::ostream& out)
{
  int failed = 0;
  for (const auto& check : checks()) {
    bool passed = false;
    std::string detail;
    try {
      passed = check.body();
    } catch (const std::exception& e) {
      detail = std::string(" (") + e.what() + ")";
    }
    out << (passed ? "PASS " : "FAIL ") << check.name << detail << '\n';
    failed += passed ? 0 : 1;
  }
  out << (failed == 0 ? "selftest passed" : "selftest failed: " + std::to_string(failed) + " check(s)") << '\n';
  return failed;
}

}  // namespace nsfem::cli
