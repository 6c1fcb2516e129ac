#ifndef NSFEM_HJ_SOLVER_HPP
#define NSFEM_HJ_SOLVER_HPP

#include <memory>
#include <string>
#include <vector>

#include "nsfem/fem.hpp"
#include "nsfem/hamiltonian.hpp"
#include "nsfem/report.hpp"

namespace nsfem {

/// Outcome of a nonlinear solve. `residual_history[k]` is the dual-norm
/// residual after k accepted steps.
template <class State>
struct SolveReportT {
  int iterations = 0;
  std::vector<double> residual_history;
  std::vector<double> step_sizes;
  bool converged = false;
  State solution;
  std::string message;

  double final_residual() const { return residual_history.empty() ? -1.0 : residual_history.back(); }
};

using SolveReport = SolveReportT<Vector>;

/// Discrete viscous Hamilton-Jacobi problem: find u_h in V_h with
///   int Du_h.Dphi + H(x,Du_h) phi + lambda u_h phi = int f phi.
/// Immutable; the linear operators are assembled once at construction.
class HjProblem {
public:
  HjProblem(std::shared_ptr<const FeSpace> space, HamiltonianModel model, double lambda, Vector load);

  /// Load vector from a source field with the order-3 rule.
  static HjProblem from_source(std::shared_ptr<const FeSpace> space, HamiltonianModel model, double lambda,
                               const ScalarField& f);

  const FeSpace& space() const noexcept { return *space_; }
  std::shared_ptr<const FeSpace> space_ptr() const noexcept { return space_; }
  const HamiltonianModel& model() const noexcept { return model_; }
  double lambda() const noexcept { return lambda_; }
  const Vector& load() const noexcept { return load_; }

  /// K + lambda M
  const SparseMatrix& linear_matrix() const noexcept { return ops_->linear; }
  const DualNorm& dual_norm() const noexcept { return ops_->dual; }
  const SolutionOperator& solution_operator() const noexcept { return ops_->solution; }

  /// Same discretisation, different load.
  HjProblem with_load(Vector load) const;

private:
  struct Operators {
    SparseMatrix linear;
    DualNorm dual;
    SolutionOperator solution;
  };

  std::shared_ptr<const FeSpace> space_;
  HamiltonianModel model_;
  double lambda_;
  Vector load_;
  std::shared_ptr<const Operators> ops_;
};

/// f := -Lap u* + H(x, Du*) + lambda u*, so that u* solves the continuous problem.
ScalarField hj_manufactured_source(const ManufacturedSolution& exact, const HamiltonianModel& model, double lambda);

/// b[i] = int H(x, Du_h) phi_i, order-3 rule in x with the elementwise gradient.
Vector hamiltonian_load(const FeSpace& space, const HamiltonianModel& model, const Vector& u);

/// Dual coefficients r[i] = int Du.Dphi_i + H(x,Du) phi_i + lambda u phi_i - f phi_i.
Vector hj_residual(const HjProblem& problem, const Vector& u);

/// K + lambda M + C(xi) with xi the elementwise Clarke selection at u.
SparseMatrix hj_jacobian(const HjProblem& problem, const Vector& u);

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 50;
  /// damping s_k in {1, 1/2, ..., 2^-max_halvings}
  int max_halvings = 10;
};

/// Damped semismooth Newton. Throws SolverError on a singular Jacobian;
/// exhausted damping or the iteration cap yield converged = false.
SolveReport solve_newton(const HjProblem& problem, const Vector& u0, const NewtonOptions& options = {});

struct PicardOptions {
  double tol = 1e-10;
  int max_iter = 500;
  /// relaxation in (0, 1]
  double theta = 0.5;
};

/// u <- (1 - theta) u + theta T_h(f - H(., Du)). Never throws on divergence;
/// reports converged = false instead.
SolveReport solve_picard(const HjProblem& problem, const Vector& u0, const PicardOptions& options = {});

struct HjStudyConfig {
  std::vector<int> levels{8, 16, 32, 64};
  double lambda = 1.0;
  std::string solver = "newton";
  double tol = 1e-10;
  int max_iter = 100;
  double theta = 0.5;
};

/// Solves the manufactured problem on unit_square_mesh(n) for every level
/// and records H1 / L2 errors with fitted rates.
ConvergenceReport convergence_study_hj(const HamiltonianModel& model, const ManufacturedSolution& exact,
                                       const HjStudyConfig& config);

}  // namespace nsfem

#endif  // NSFEM_HJ_SOLVER_HPP
