#include "nsfem/mfg_solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "nsfem/errors.hpp"
#include "nsfem/parallel.hpp"

namespace nsfem {

MfgProblem::MfgProblem(std::shared_ptr<const FeSpace> space, HamiltonianModel model, CouplingModel coupling,
                       double lambda, MfgData data)
    : space_(std::move(space)),
      model_(std::move(model)),
      coupling_(std::move(coupling)),
      lambda_(lambda),
      manufactured_(data.manufactured)
{
  if (!space_) throw std::invalid_argument("MfgProblem: null space");
  if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) throw std::invalid_argument("MfgProblem: lambda must be > 0");
  if (!model_.has_hp()) throw std::invalid_argument("MfgProblem: Hamiltonian '" + model_.name() + "' provides no H_p");
  if (!coupling_.f || !coupling_.df) throw std::invalid_argument("MfgProblem: coupling needs f and its derivative");

  const int n = space_->n_free();
  m0_ = data.m0 ? interpolate_nodal(*space_, data.m0) : Vector::Zero(n);
  if (!manufactured_) {
    if (m0_.minCoeff() < 0.0) throw std::invalid_argument("MfgProblem: m0 must be nonnegative");
    if (m0_.cwiseAbs().maxCoeff() == 0.0) throw std::invalid_argument("MfgProblem: m0 must not vanish");
  }

  auto ops = std::make_shared<Operators>(Operators{assemble_stiffness(*space_), assemble_mass(*space_), {},
                                                   DualNorm(*space_), nullptr});
  ops->linear = ops->stiffness.add(ops->mass, lambda_);
  if (coupling_.kind == CouplingKind::nonlocal)
    ops->smoother = std::make_shared<const Smoother>(*space_, coupling_.smoothing_steps, coupling_.smoothing_scale);
  ops_ = std::move(ops);

  hjb_source_ = data.g_hjb ? assemble_load(*space_, data.g_hjb, 3) : Vector::Zero(n);
  fp_load_ = lambda_ * (ops_->mass * m0_);
  if (data.g_fp) fp_load_ += assemble_load(*space_, data.g_fp, 3);
}

Vector MfgProblem::coupling_argument(const Vector& m) const
{
  return ops_->smoother ? ops_->smoother->apply(m) : m;
}

MfgProblem MfgProblem::with_lambda(double lambda) const
{
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("MfgProblem: lambda must be > 0");
  MfgProblem out(*this);
  auto ops = std::make_shared<Operators>(*ops_);
  ops->linear = ops->stiffness.add(ops->mass, lambda);
  out.ops_ = std::move(ops);
  out.fp_load_ = fp_load_ + (lambda - lambda_) * (ops_->mass * m0_);
  out.lambda_ = lambda;
  return out;
}

MfgState default_initial_state(const MfgProblem& problem)
{
  return {Vector::Zero(problem.space().n_free()), problem.m0()};
}

MfgData mfg_manufactured_data(const ManufacturedSolution& u_exact, const ManufacturedSolution& m_exact,
                              const HamiltonianModel& model, const CouplingModel& coupling, double lambda)
{
  if (coupling.kind != CouplingKind::local)
    throw std::invalid_argument("manufactured MFG sources require a local coupling");
  if (!model.has_hp()) throw std::invalid_argument("manufactured MFG sources require H_p");
  MfgData data;
  data.manufactured = true;
  data.g_hjb = [=](const Vec2& x) {
    return -u_exact.laplacian(x) + model(x, u_exact.gradient(x)) + lambda * u_exact.value(x) -
           coupling.f(x, m_exact.value(x));
  };
  data.g_fp = [=](const Vec2& x) {
    const Vec2 du = u_exact.gradient(x);
    const double m = m_exact.value(x);
    // div(m H_p(Du)) = Dm . H_p(Du) + m tr(D H_p(Du) D^2 u)
    const double div_flux =
        m_exact.gradient(x).dot(model.hp(x, du)) + m * (model.hp_selection(x, du) * u_exact.hessian(x)).trace();
    return -m_exact.laplacian(x) - div_flux + lambda * m;
  };
  return data;
}

MfgResidual mfg_residual(const MfgProblem& problem, const MfgState& state)
{
  const FeSpace& space = problem.space();
  space.check_size(state.u, "mfg_residual u");
  space.check_size(state.m, "mfg_residual m");
  MfgResidual r;
  r.ru = problem.linear_matrix() * state.u + hamiltonian_load(space, problem.model(), state.u) -
         coupling_load(problem.coupling(), space, problem.coupling_argument(state.m)) - problem.hjb_source();
  const SparseMatrix drift = assemble_advection(space, hp_field(problem.model(), space, state.u));
  r.rm = problem.linear_matrix() * state.m + drift.transpose() * state.m - problem.fp_load();
  if (!r.ru.allFinite() || !r.rm.allFinite()) throw NonFiniteError("non-finite MFG residual", 0.0, 0.0);
  return r;
}

double mfg_residual_norm(const MfgProblem& problem, const MfgResidual& r)
{
  const double a = problem.dual_norm()(r.ru);
  const double b = problem.dual_norm()(r.rm);
  return std::sqrt(a * a + b * b);
}

namespace {

Vector stack(const Vector& a, const Vector& b)
{
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

void append_block(std::vector<Eigen::Triplet<double>>& out, const SparseMatrix& a, int row0, int col0,
                  double alpha = 1.0)
{
  for (const auto& t : a.triplets()) out.emplace_back(row0 + t.row, col0 + t.col, alpha * t.value);
}

}  // namespace

MfgJacobian mfg_jacobian(const MfgProblem& problem, const MfgState& state, const std::vector<Mat2>* xi)
{
  const FeSpace& space = problem.space();
  space.check_size(state.u, "mfg_jacobian u");
  space.check_size(state.m, "mfg_jacobian m");

  std::vector<Mat2> selection = xi ? *xi : hp_selection_field(problem.model(), space, state.u);
  if (static_cast<int>(selection.size()) != space.num_elements())
    throw std::invalid_argument("mfg_jacobian: one H_p selection per element required");

  const SparseMatrix drift = assemble_advection(space, hp_field(problem.model(), space, state.u));

  // (2,1): int m (xi D phi_j) . D psi_i
  std::vector<Triplet> t21;
  for (int t = 0; t < space.num_elements(); ++t) {
    const auto& e = space.element(t);
    const double weight = e.area * space.mean(t, state.m);
    const Mat2& x = selection[static_cast<std::size_t>(t)];
    for (int i = 0; i < 3; ++i) {
      if (e.dofs[i] < 0) continue;
      for (int j = 0; j < 3; ++j)
        if (e.dofs[j] >= 0) t21.push_back({e.dofs[i], e.dofs[j], weight * (x * e.grad[j]).dot(e.grad[i])});
    }
  }

  MfgJacobian jac;
  jac.n_ = space.n_free();
  jac.j11_ = problem.linear_matrix().add(drift);
  jac.j12_ = coupling_derivative_mass(problem.coupling(), space, problem.coupling_argument(state.m)).scaled(-1.0);
  jac.j21_ = SparseMatrix::from_triplets(jac.n_, jac.n_, std::move(t21));
  jac.j22_ = problem.linear_matrix().add(drift.transpose());
  jac.smoother_ = problem.smoother();
  return jac;
}

Vector MfgJacobian::apply(const Vector& x) const
{
  if (x.size() != size()) throw std::invalid_argument("MfgJacobian::apply: size mismatch");
  const Vector xu = x.head(n_);
  const Vector xm = x.tail(n_);
  const Vector w = smoother_ ? smoother_->apply(xm) : xm;
  return stack(j11_ * xu + j12_ * w, j21_ * xu + j22_ * xm);
}

Eigen::SparseMatrix<double> MfgJacobian::augmented() const
{
  const int steps = smoother_ ? smoother_->steps() : 0;
  const int total = (2 + steps) * n_;
  std::vector<Eigen::Triplet<double>> t;
  append_block(t, j11_, 0, 0);
  append_block(t, j12_, 0, steps == 0 ? n_ : (1 + steps) * n_);
  append_block(t, j21_, n_, 0);
  append_block(t, j22_, n_, n_);
  for (int k = 1; k <= steps; ++k) {
    // (M_L + sigma K) w_k - M w_{k-1} = 0, w_0 = m
    const int row = (1 + k) * n_;
    append_block(t, smoother_->system(), row, row);
    append_block(t, smoother_->mass(), row, row - n_, -1.0);
  }
  Eigen::SparseMatrix<double> a(total, total);
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  return a;
}

const MfgJacobian::Factor& MfgJacobian::factor(bool transpose) const
{
  auto& slot = transpose ? lu_t_ : lu_;
  if (!slot) {
    Eigen::SparseMatrix<double> a = augmented();
    if (transpose) {
      Eigen::SparseMatrix<double> at = a.transpose();
      at.makeCompressed();
      a = std::move(at);
    }
    auto lu = std::make_shared<Factor>();
    lu->compute(a);
    if (lu->info() != Eigen::Success) throw SolverError("MFG Jacobian factorisation failed: " + lu->lastErrorMessage());
    slot = std::move(lu);
  }
  return *slot;
}

Vector MfgJacobian::solve(const Vector& b) const
{
  if (b.size() != size()) throw std::invalid_argument("MfgJacobian::solve: size mismatch");
  const Factor& lu = factor(false);
  Vector rhs = Vector::Zero(lu.rows());
  rhs.head(size()) = b;
  const Vector x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SolverError("MFG Jacobian solve failed");
  return x.head(size());
}

Vector MfgJacobian::solve_transpose(const Vector& b) const
{
  if (b.size() != size()) throw std::invalid_argument("MfgJacobian::solve_transpose: size mismatch");
  const Factor& lu = factor(true);
  Vector rhs = Vector::Zero(lu.rows());
  rhs.head(size()) = b;
  const Vector x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SolverError("MFG Jacobian transpose solve failed");
  return x.head(size());
}

Eigen::MatrixXd MfgJacobian::to_dense() const
{
  Eigen::MatrixXd out(size(), size());
  Vector e = Vector::Zero(size());
  for (int j = 0; j < size(); ++j) {
    e[j] = 1.0;
    out.col(j) = apply(e);
    e[j] = 0.0;
  }
  return out;
}

MfgSolveReport mfg_newton(const MfgProblem& problem, const MfgState& state0, const NewtonOptions& options)
{
  if (!(options.tol > 0.0)) throw std::invalid_argument("mfg_newton: tol must be positive");
  const int n = problem.space().n_free();

  MfgSolveReport report;
  report.solution = state0;
  MfgResidual r = mfg_residual(problem, report.solution);
  double rnorm = mfg_residual_norm(problem, r);
  report.residual_history.push_back(rnorm);

  while (rnorm > options.tol) {
    if (report.iterations >= options.max_iter) {
      report.message = "iteration cap reached";
      return report;
    }
    const Vector step = mfg_jacobian(problem, report.solution).solve(stack(r.ru, r.rm));

    double s = 1.0;
    bool accepted = false;
    for (int k = 0; k <= options.max_halvings; ++k, s *= 0.5) {
      MfgState trial{report.solution.u - s * step.head(n), report.solution.m - s * step.tail(n)};
      MfgResidual r_trial = mfg_residual(problem, trial);
      const double trial_norm = mfg_residual_norm(problem, r_trial);
      if (trial_norm < rnorm) {
        report.solution = std::move(trial);
        r = std::move(r_trial);
        rnorm = trial_norm;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      report.message = "damping exhausted";
      return report;
    }
    ++report.iterations;
    report.step_sizes.push_back(s);
    report.residual_history.push_back(rnorm);
  }
  report.converged = true;
  return report;
}

MfgSolveReport mfg_picard(const MfgProblem& problem, const MfgState& state0, const MfgPicardOptions& options)
{
  if (!(options.tol > 0.0)) throw std::invalid_argument("mfg_picard: tol must be positive");
  if (!(options.theta > 0.0 && options.theta <= 1.0)) throw std::invalid_argument("mfg_picard: theta must lie in (0, 1]");
  const FeSpace& space = problem.space();
  space.check_size(state0.u, "mfg_picard u");
  space.check_size(state0.m, "mfg_picard m");
  const double inner_tol = options.inner_tol > 0.0 ? options.inner_tol : 1e-2 * options.tol;

  const HjProblem hjb(problem.space_ptr(), problem.model(), problem.lambda(), Vector::Zero(space.n_free()));

  MfgSolveReport report;
  report.solution = state0;
  double rnorm = mfg_residual_norm(problem, mfg_residual(problem, report.solution));
  report.residual_history.push_back(rnorm);

  while (rnorm > options.tol) {
    if (report.iterations >= options.max_iter) {
      report.message = "iteration cap reached";
      return report;
    }
    const Vector load =
        coupling_load(problem.coupling(), space, problem.coupling_argument(report.solution.m)) + problem.hjb_source();
    const SolveReport inner = solve_newton(hjb.with_load(load), report.solution.u, {inner_tol, 100, 10});
    if (!inner.converged)
      throw SolverError("mfg_picard: inner HJB solve failed (" + inner.message + ")", inner.final_residual());
    report.solution.u = inner.solution;

    const SparseMatrix drift = assemble_advection(space, hp_field(problem.model(), space, report.solution.u));
    Eigen::SparseMatrix<double> fp = problem.linear_matrix().add(drift.transpose()).to_eigen();
    fp.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(fp);
    if (lu.info() != Eigen::Success) throw SolverError("mfg_picard: Fokker-Planck factorisation failed");
    const Vector m_new = lu.solve(problem.fp_load());
    report.solution.m = (1.0 - options.theta) * report.solution.m + options.theta * m_new;
    ++report.iterations;
    report.step_sizes.push_back(options.theta);

    if (!report.solution.m.allFinite()) {
      report.message = "density became non-finite";
      return report;
    }
    rnorm = mfg_residual_norm(problem, mfg_residual(problem, report.solution));
    report.residual_history.push_back(rnorm);
  }
  report.converged = true;
  return report;
}

ConvergenceReport convergence_study_mfg(const HamiltonianModel& model, const CouplingModel& coupling,
                                        const ManufacturedSolution& u_exact, const ManufacturedSolution& m_exact,
                                        const MfgStudyConfig& config)
{
  if (config.levels.empty()) throw std::invalid_argument("convergence_study_mfg: no levels");
  if (!(config.r >= 2.0 && config.r <= 6.0)) throw std::invalid_argument("convergence_study_mfg: r must lie in [2, 6]");
  const auto start = std::chrono::steady_clock::now();
  const MfgData data = mfg_manufactured_data(u_exact, m_exact, model, coupling, config.lambda);

  ConvergenceReport report;
  report.rows.resize(config.levels.size());
  parallel_for(static_cast<int>(config.levels.size()), [&](int i) {
    auto space = make_space(unit_square_mesh(config.levels[static_cast<std::size_t>(i)]));
    const MfgProblem problem(space, model, coupling, config.lambda, data);
    const MfgState start_state{Vector::Zero(space->n_free()), Vector::Zero(space->n_free())};
    MfgSolveReport solve;
    if (config.solver == "newton")
      solve = mfg_newton(problem, start_state, {config.tol, config.max_iter, 10});
    else if (config.solver == "picard")
      solve = mfg_picard(problem, start_state, {config.tol, config.max_iter, config.theta, 0.0});
    else
      throw std::invalid_argument("unknown solver '" + config.solver + "'");

    const auto& s = solve.solution;
    ConvergenceRow row;
    row.h = space->h();
    row.dofs = 2 * space->n_free();
    row.iterations = solve.iterations;
    row.converged = solve.converged;
    const double h1 = error_vs_exact(*space, s.u, u_exact.value, u_exact.gradient, {NormKind::H1});
    const double l2 = error_vs_exact(*space, s.m, m_exact.value, m_exact.gradient, {NormKind::L2});
    const double w1r = error_vs_exact(*space, s.u, u_exact.value, u_exact.gradient, {NormKind::W1r, config.r});
    const double lr = error_vs_exact(*space, s.m, m_exact.value, m_exact.gradient, {NormKind::Lr, config.r});
    row.errors = {{"H1_u", h1}, {"L2_m", l2}, {"H1xL2", h1 + l2}, {"W1r_u", w1r}, {"Lr_m", lr}, {"W1rxLr", w1r + lr}};
    report.rows[static_cast<std::size_t>(i)] = std::move(row);
  });
  report.finalize();
  report.config = {{"levels", config.levels},   {"hamiltonian", model.name()}, {"coupling", coupling.name},
                   {"lambda", config.lambda},   {"r", config.r},               {"manufactured", u_exact.name},
                   {"solver", config.solver},   {"tol", config.tol},           {"max_iter", config.max_iter},
                   {"theta", config.theta}};
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace nsfem
