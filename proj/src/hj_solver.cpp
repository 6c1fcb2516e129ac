#include "nsfem/hj_solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include <Eigen/SparseLU>

#include "nsfem/errors.hpp"
#include "nsfem/parallel.hpp"
#include "nsfem/quadrature.hpp"

namespace nsfem {

HjProblem::HjProblem(std::shared_ptr<const FeSpace> space, HamiltonianModel model, double lambda, Vector load)
    : space_(std::move(space)), model_(std::move(model)), lambda_(lambda), load_(std::move(load))
{
  if (!space_) throw std::invalid_argument("HjProblem: null space");
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw std::invalid_argument("HjProblem: lambda must be >= 0");
  space_->check_size(load_, "HjProblem load");
  SparseMatrix linear = assemble_stiffness(*space_).add(assemble_mass(*space_), lambda_);
  ops_ = std::make_shared<const Operators>(Operators{std::move(linear), DualNorm(*space_), SolutionOperator(*space_, lambda_)});
}

HjProblem HjProblem::from_source(std::shared_ptr<const FeSpace> space, HamiltonianModel model, double lambda,
                                 const ScalarField& f)
{
  Vector load = assemble_load(*space, f, 3);
  return HjProblem(std::move(space), std::move(model), lambda, std::move(load));
}

HjProblem HjProblem::with_load(Vector load) const
{
  space_->check_size(load, "HjProblem::with_load");
  HjProblem copy = *this;
  copy.load_ = std::move(load);
  return copy;
}

ScalarField hj_manufactured_source(const ManufacturedSolution& exact, const HamiltonianModel& model, double lambda)
{
  return [exact, model, lambda](const Vec2& x) {
    return -exact.laplacian(x) + model(x, exact.gradient(x)) + lambda * exact.value(x);
  };
}

Vector hamiltonian_load(const FeSpace& space, const HamiltonianModel& model, const Vector& u)
{
  space.check_size(u, "hamiltonian_load");
  std::vector<Vec2> grads(static_cast<std::size_t>(space.num_elements()));
  for (int t = 0; t < space.num_elements(); ++t) grads[static_cast<std::size_t>(t)] = space.gradient(t, u);
  return assemble_load_pointwise(
      space,
      [&](int t, const Vec2& x, const std::array<double, 3>&) { return model(x, grads[static_cast<std::size_t>(t)]); },
      3);
}

Vector hj_residual(const HjProblem& problem, const Vector& u)
{
  problem.space().check_size(u, "hj_residual");
  Vector r = problem.linear_matrix() * u + hamiltonian_load(problem.space(), problem.model(), u) - problem.load();
  if (!r.allFinite()) throw NonFiniteError("non-finite HJ residual", 0.0, 0.0);
  return r;
}

SparseMatrix hj_jacobian(const HjProblem& problem, const Vector& u)
{
  const auto xi = selection_field(problem.model(), problem.space(), u);
  return problem.linear_matrix().add(assemble_advection(problem.space(), xi));
}

namespace {

Vector solve_sparse(const SparseMatrix& a, const Vector& b)
{
  Eigen::SparseMatrix<double> m = a.to_eigen();
  m.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) throw SolverError("sparse LU factorisation failed: " + lu.lastErrorMessage());
  Vector x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SolverError("sparse LU solve failed");
  return x;
}

}  // namespace

SolveReport solve_newton(const HjProblem& problem, const Vector& u0, const NewtonOptions& options)
{
  if (!(options.tol > 0.0)) throw std::invalid_argument("solve_newton: tol must be positive");
  problem.space().check_size(u0, "solve_newton");

  SolveReport report;
  report.solution = u0;
  Vector r = hj_residual(problem, report.solution);
  double rnorm = problem.dual_norm()(r);
  report.residual_history.push_back(rnorm);

  while (rnorm > options.tol) {
    if (report.iterations >= options.max_iter) {
      report.message = "iteration cap reached";
      return report;
    }
    const Vector step = solve_sparse(hj_jacobian(problem, report.solution), r);

    double s = 1.0;
    bool accepted = false;
    for (int k = 0; k <= options.max_halvings; ++k, s *= 0.5) {
      Vector trial = report.solution - s * step;
      Vector r_trial = hj_residual(problem, trial);
      const double trial_norm = problem.dual_norm()(r_trial);
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

SolveReport solve_picard(const HjProblem& problem, const Vector& u0, const PicardOptions& options)
{
  if (!(options.tol > 0.0)) throw std::invalid_argument("solve_picard: tol must be positive");
  if (!(options.theta > 0.0 && options.theta <= 1.0)) throw std::invalid_argument("solve_picard: theta must lie in (0, 1]");
  problem.space().check_size(u0, "solve_picard");

  SolveReport report;
  report.solution = u0;
  double rnorm = problem.dual_norm()(hj_residual(problem, report.solution));
  report.residual_history.push_back(rnorm);

  while (rnorm > options.tol) {
    if (report.iterations >= options.max_iter) {
      report.message = "iteration cap reached";
      return report;
    }
    const Vector rhs = problem.load() - hamiltonian_load(problem.space(), problem.model(), report.solution);
    Vector next;
    try {
      next = problem.solution_operator().apply(rhs);
    } catch (const SolverError& e) {
      report.message = e.what();
      return report;
    }
    report.solution = (1.0 - options.theta) * report.solution + options.theta * next;
    ++report.iterations;
    report.step_sizes.push_back(options.theta);
    if (!report.solution.allFinite()) {
      report.message = "iterate became non-finite";
      return report;
    }
    rnorm = problem.dual_norm()(problem.linear_matrix() * report.solution +
                                hamiltonian_load(problem.space(), problem.model(), report.solution) - problem.load());
    report.residual_history.push_back(rnorm);
    if (!std::isfinite(rnorm)) {
      report.message = "residual became non-finite";
      return report;
    }
  }
  report.converged = true;
  return report;
}

ConvergenceReport convergence_study_hj(const HamiltonianModel& model, const ManufacturedSolution& exact,
                                       const HjStudyConfig& config)
{
  if (config.levels.empty()) throw std::invalid_argument("convergence_study_hj: no levels");
  const auto start = std::chrono::steady_clock::now();
  const ScalarField source = hj_manufactured_source(exact, model, config.lambda);

  ConvergenceReport report;
  report.rows.resize(config.levels.size());
  parallel_for(static_cast<int>(config.levels.size()), [&](int i) {
    auto space = make_space(unit_square_mesh(config.levels[static_cast<std::size_t>(i)]));
    const HjProblem problem = HjProblem::from_source(space, model, config.lambda, source);
    const Vector u0 = Vector::Zero(space->n_free());
    SolveReport solve;
    if (config.solver == "newton")
      solve = solve_newton(problem, u0, {config.tol, config.max_iter, 10});
    else if (config.solver == "picard")
      solve = solve_picard(problem, u0, {config.tol, config.max_iter, config.theta});
    else
      throw std::invalid_argument("unknown solver '" + config.solver + "'");

    ConvergenceRow row;
    row.h = space->h();
    row.dofs = space->n_free();
    row.iterations = solve.iterations;
    row.converged = solve.converged;
    row.errors["H1"] = error_vs_exact(*space, solve.solution, exact.value, exact.gradient, {NormKind::H1});
    row.errors["L2"] = error_vs_exact(*space, solve.solution, exact.value, exact.gradient, {NormKind::L2});
    report.rows[static_cast<std::size_t>(i)] = std::move(row);
  });
  report.finalize();
  report.config = {{"levels", config.levels},     {"hamiltonian", model.name()}, {"lambda", config.lambda},
                   {"manufactured", exact.name},  {"solver", config.solver},     {"tol", config.tol},
                   {"max_iter", config.max_iter}, {"theta", config.theta}};
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace nsfem
