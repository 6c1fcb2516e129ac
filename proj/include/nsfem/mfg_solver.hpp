#ifndef NSFEM_MFG_SOLVER_HPP
#define NSFEM_MFG_SOLVER_HPP

#include <memory>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "nsfem/coupling.hpp"
#include "nsfem/fem.hpp"
#include "nsfem/hamiltonian.hpp"
#include "nsfem/hj_solver.hpp"
#include "nsfem/report.hpp"

namespace nsfem {

/// Value function and density coefficients on the same space.
struct MfgState {
  Vector u;
  Vector m;
};

/// Data of the stationary system
///   -Lap u + H(x,Du) + lambda u = F[m] + g_hjb
///   -Lap m - div(m H_p(x,Du)) + lambda m = lambda m0 + g_fp
/// with homogeneous Dirichlet conditions. Sources g_* are optional and used
/// for manufactured runs, which also lift the m0 >= 0, m0 != 0 requirement.
struct MfgData {
  ScalarField m0;
  ScalarField g_hjb;
  ScalarField g_fp;
  bool manufactured = false;
};

class MfgProblem {
public:
  MfgProblem(std::shared_ptr<const FeSpace> space, HamiltonianModel model, CouplingModel coupling, double lambda,
             MfgData data);

  const FeSpace& space() const noexcept { return *space_; }
  std::shared_ptr<const FeSpace> space_ptr() const noexcept { return space_; }
  const HamiltonianModel& model() const noexcept { return model_; }
  const CouplingModel& coupling() const noexcept { return coupling_; }
  double lambda() const noexcept { return lambda_; }
  bool manufactured() const noexcept { return manufactured_; }

  /// nodal interpolant of m0
  const Vector& m0() const noexcept { return m0_; }
  /// int g_hjb phi_i
  const Vector& hjb_source() const noexcept { return hjb_source_; }
  /// lambda M m0 + int g_fp psi_i
  const Vector& fp_load() const noexcept { return fp_load_; }

  const SparseMatrix& linear_matrix() const noexcept { return ops_->linear; }
  const SparseMatrix& mass() const noexcept { return ops_->mass; }
  const SparseMatrix& stiffness() const noexcept { return ops_->stiffness; }
  const DualNorm& dual_norm() const noexcept { return ops_->dual; }
  /// Present for nonlocal couplings.
  const std::shared_ptr<const Smoother>& smoother() const noexcept { return ops_->smoother; }

  /// Argument of f in the coupling: m itself, or its smoothed version.
  Vector coupling_argument(const Vector& m) const;

  /// Same data with another lambda (shares the mesh-level operators).
  MfgProblem with_lambda(double lambda) const;

private:
  struct Operators {
    SparseMatrix stiffness;
    SparseMatrix mass;
    SparseMatrix linear;
    DualNorm dual;
    std::shared_ptr<const Smoother> smoother;
  };

  std::shared_ptr<const FeSpace> space_;
  HamiltonianModel model_;
  CouplingModel coupling_;
  double lambda_;
  bool manufactured_;
  Vector m0_;
  Vector hjb_source_;
  Vector fp_load_;
  std::shared_ptr<const Operators> ops_;
};

/// u = 0, m = interpolant of m0.
MfgState default_initial_state(const MfgProblem& problem);

/// Sources making (u*, m*) an exact solution of the continuous system for a
/// local coupling (m0 = 0, so all forcing sits in g_fp). div(m* H_p(Du*)) is
/// evaluated with the H_p Jacobian selection, which is exact almost
/// everywhere.
MfgData mfg_manufactured_data(const ManufacturedSolution& u_exact, const ManufacturedSolution& m_exact,
                              const HamiltonianModel& model, const CouplingModel& coupling, double lambda);

struct MfgResidual {
  Vector ru;
  Vector rm;
};

MfgResidual mfg_residual(const MfgProblem& problem, const MfgState& state);
/// sqrt(||r_u||^2 + ||r_m||^2) in the (K+M)^{-1} dual norm.
double mfg_residual_norm(const MfgProblem& problem, const MfgResidual& r);

/// Block Jacobian of the stacked residual at a state. Unknowns are ordered
/// (u, m). Nonlocal couplings are handled by appending one block of
/// auxiliary unknowns per smoothing sweep, which keeps the factorised system
/// sparse; solves return the (u, m) part.
class MfgJacobian {
public:
  int size() const noexcept { return 2 * n_; }

  Vector apply(const Vector& x) const;
  Vector solve(const Vector& b) const;
  Vector solve_transpose(const Vector& b) const;
  /// Dense (u, m) block matrix; columns through the smoother for nonlocal couplings.
  Eigen::MatrixXd to_dense() const;

  const SparseMatrix& block_uu() const noexcept { return j11_; }
  /// -M_{f'}; acts on the smoothed density for nonlocal couplings
  const SparseMatrix& block_um() const noexcept { return j12_; }
  const SparseMatrix& block_mu() const noexcept { return j21_; }
  const SparseMatrix& block_mm() const noexcept { return j22_; }

private:
  friend MfgJacobian mfg_jacobian(const MfgProblem&, const MfgState&, const std::vector<Mat2>*);

  using Factor = Eigen::SparseLU<Eigen::SparseMatrix<double>>;
  Eigen::SparseMatrix<double> augmented() const;
  const Factor& factor(bool transpose) const;

  int n_ = 0;
  SparseMatrix j11_, j12_, j21_, j22_;
  std::shared_ptr<const Smoother> smoother_;
  mutable std::shared_ptr<Factor> lu_;
  mutable std::shared_ptr<Factor> lu_t_;
};

/// Jacobian at `state`; `xi` overrides the per-element H_p Jacobian selection.
MfgJacobian mfg_jacobian(const MfgProblem& problem, const MfgState& state, const std::vector<Mat2>* xi = nullptr);

using MfgSolveReport = SolveReportT<MfgState>;

/// Damped block semismooth Newton on the stacked residual.
MfgSolveReport mfg_newton(const MfgProblem& problem, const MfgState& state0, const NewtonOptions& options = {});

struct MfgPicardOptions {
  double tol = 1e-9;
  int max_iter = 200;
  double theta = 0.5;
  /// inner HJB Newton tolerance; non-positive means 1e-2 * tol
  double inner_tol = 0.0;
};

/// Alternating fixed point: HJB in u for frozen m (Newton), then the linear
/// Fokker-Planck equation in m for frozen u, relaxed by theta.
MfgSolveReport mfg_picard(const MfgProblem& problem, const MfgState& state0, const MfgPicardOptions& options = {});

struct MfgStudyConfig {
  std::vector<int> levels{8, 16, 32, 64};
  double lambda = 1.0;
  double r = 4.0;
  std::string solver = "newton";
  double tol = 1e-9;
  int max_iter = 100;
  double theta = 0.5;
};

/// Manufactured (u*, m*) study; error keys H1_u, L2_m, H1xL2, W1r_u, Lr_m, W1rxLr.
ConvergenceReport convergence_study_mfg(const HamiltonianModel& model, const CouplingModel& coupling,
                                        const ManufacturedSolution& u_exact, const ManufacturedSolution& m_exact,
                                        const MfgStudyConfig& config);

}  // namespace nsfem

#endif  // NSFEM_MFG_SOLVER_HPP
