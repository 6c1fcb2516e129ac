#ifndef NSFEM_DIAGNOSTICS_HPP
#define NSFEM_DIAGNOSTICS_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "nsfem/mfg_solver.hpp"
#include "nsfem/rates.hpp"

namespace nsfem {

/// Gram matrices of the domain (X) and range (Y) norms. Both must be
/// symmetric positive definite; the constructor checks this with a Cholesky
/// factorisation.
class GramPair {
public:
  GramPair(Eigen::MatrixXd gram_x, Eigen::MatrixXd gram_y);
  static GramPair identity(int cols, int rows);

  const Eigen::MatrixXd& x() const noexcept { return gram_x_; }
  const Eigen::MatrixXd& y() const noexcept { return gram_y_; }

private:
  Eigen::MatrixXd gram_x_;
  Eigen::MatrixXd gram_y_;
};

/// Banach constant of A between the Gram-weighted spaces: the smallest s
/// with A^T G_Y A x = s^2 G_X x. Computed from the generalized symmetric
/// eigenproblem, then refined by the Rayleigh quotient |Ax|_Y / |x|_X of the
/// eigenvector, which is accurate to working precision.
double banach_constant(const Eigen::MatrixXd& a, const GramPair& grams);

/// sup |Ax|_Y / |x|_X (largest generalized singular value).
double weighted_operator_norm(const Eigen::MatrixXd& a, const GramPair& grams);

struct PerturbationResult {
  bool holds = false;
  /// c(T+S) - (c(T) - |S|)
  double slack = 0.0;
  double constant_t = 0.0;
  double norm_s = 0.0;
  double constant_ts = 0.0;
};

/// Checks c(T + S) >= c(T) - |S| - 1e-12.
PerturbationResult perturbation_check(const Eigen::MatrixXd& t, const Eigen::MatrixXd& s, const GramPair& grams);

struct StabilityScanOptions {
  int samples = 10;
  /// elements with | |Du_T| - kink | <= band * kink are treated as kink
  /// elements and receive mixtures of the branch Jacobians
  double kink_band = 0.05;
  double rtol = 1e-12;
  /// cap on Lanczos restarts
  int max_iter = 200;
  /// Krylov dimension per restart
  int krylov_dim = 40;
  std::uint64_t seed = 42;
  /// optional lambda grid; the linearisation is re-evaluated at the same
  /// state for each value. Empty means the problem's own lambda.
  std::vector<double> lambdas;
};

struct StabilitySample {
  double h = 0.0;
  int sample = 0;
  double smin = 0.0;
  double lambda = 0.0;
};

struct StabilityScanReport {
  std::vector<StabilitySample> rows;
  /// min over samples, per level in scan order
  std::vector<double> level_min;
  std::vector<double> level_h;
  double min_smin = 0.0;
  /// max / min of level_min
  double ratio = 0.0;
  /// number of kink elements per level
  std::vector<int> kink_elements;

  void append(const StabilityScanReport& level);
};

/// Smallest singular value of I + T_h A_h = L^{-1} J in the H1 x L2 geometry
/// (Gram blockdiag(K + M, M)), where L = blockdiag(K + lambda M) and J the
/// MFG block Jacobian with the given per-element H_p selection. Restarted
/// Lanczos on the inverse normal operator with sparse factorisations.
double stability_constant(const MfgProblem& problem, const MfgState& state, const std::vector<Mat2>& xi,
                          const StabilityScanOptions& options = {});

/// Dense counterpart of stability_constant for small problems (test oracle).
double stability_constant_dense(const MfgProblem& problem, const MfgState& state, const std::vector<Mat2>& xi);

/// Scans `options.samples` selections: sample k uses the convex combination
/// (1 - t_k) E_0 + t_k E_1 of the branch Jacobians on kink elements, with
/// t_k = k / (samples - 1). With a lambda grid the level minimum runs over
/// all (lambda, sample) pairs.
StabilityScanReport stability_scan(const MfgProblem& problem, const MfgState& state,
                                   const StabilityScanOptions& options = {});

}  // namespace nsfem

#endif  // NSFEM_DIAGNOSTICS_HPP
