#ifndef NSFEM_COUPLING_HPP
#define NSFEM_COUPLING_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/SparseCholesky>

#include "nsfem/fem.hpp"

namespace nsfem {

enum class CouplingKind { local, nonlocal };

/// F[m](x) = f(x, m(x)) (local) or f(x, (k*m)(x)) (nonlocal) with a discrete
/// mollifier standing in for k*.
struct CouplingModel {
  using Function = std::function<double(const Vec2& x, double m)>;

  std::string name;
  CouplingKind kind = CouplingKind::local;
  Function f;
  /// partial_m f
  Function df;
  /// C_F, a bound on |partial_m f|
  double lipschitz = 0.0;
  /// asserts partial_m f >= c0 > 0
  bool monotone = false;
  /// nonlocal only: number of smoothing sweeps and sigma = scale * h^2
  int smoothing_steps = 2;
  double smoothing_scale = 1.0;
};

CouplingModel zero_coupling();
/// f(x, m) = c m
CouplingModel linear_coupling(double c = 1.0);
/// f(x, m) = arctan(m)
CouplingModel arctan_coupling();
/// Wraps a local coupling into its smoothed nonlocal counterpart.
CouplingModel nonlocal_coupling(CouplingModel local, int steps = 2, double scale = 1.0);

/// "zero", "local:linear[:c]", "local:arctan", "nonlocal:linear[:c]", "nonlocal:arctan".
CouplingModel parse_coupling(std::string_view spec);

/// Discrete mollifier m -> ((M_L + sigma K)^{-1} M)^s m, sigma = scale h^2,
/// M_L the lumped mass matrix.
class Smoother {
public:
  Smoother(const FeSpace& space, int steps, double scale);

  Vector apply(const Vector& m) const;
  int steps() const noexcept { return steps_; }
  /// M_L + sigma K
  const SparseMatrix& system() const noexcept { return system_; }
  const SparseMatrix& mass() const noexcept { return mass_; }

private:
  int steps_;
  SparseMatrix system_;
  SparseMatrix mass_;
  std::shared_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> factor_;
};

/// b[i] = int f(x, w_h(x)) phi_i with the order-3 rule; `w` is m for a
/// local coupling and the smoothed density for a nonlocal one.
Vector coupling_load(const CouplingModel& coupling, const FeSpace& space, const Vector& w);

/// M_{f'}[i][j] = int partial_m f(x, w_h(x)) phi_j phi_i.
SparseMatrix coupling_derivative_mass(const CouplingModel& coupling, const FeSpace& space, const Vector& w);

struct MonotonicityResult {
  bool monotone = false;
  /// min over samples of lambda_min(M_{f'}), i.e. the infimum of the
  /// Rayleigh quotient rho^T M_{f'} rho / rho^T rho
  double margin = 0.0;
  /// smallest quotient met by the random probes (always >= margin)
  double min_sampled_quotient = 0.0;
};

/// Discrete Lasry-Lions check: positivity of rho^T M_{f'(m)} rho for each
/// sampled density m, probed by random rho and certified by the smallest
/// eigenvalue. Local couplings only.
MonotonicityResult check_monotonicity(const CouplingModel& coupling, const FeSpace& space,
                                      std::span<const Vector> samples, int n_rho = 100, std::uint64_t seed = 42);

}  // namespace nsfem

#endif  // NSFEM_COUPLING_HPP
