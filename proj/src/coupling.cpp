#include "nsfem/coupling.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "nsfem/errors.hpp"

namespace nsfem {

CouplingModel zero_coupling()
{
  CouplingModel c;
  c.name = "zero";
  c.f = [](const Vec2&, double) { return 0.0; };
  c.df = [](const Vec2&, double) { return 0.0; };
  c.lipschitz = 0.0;
  c.monotone = false;
  return c;
}

CouplingModel linear_coupling(double slope)
{
  if (!std::isfinite(slope)) throw std::invalid_argument("linear coupling: non-finite slope");
  CouplingModel c;
  std::ostringstream name;
  name << "local:linear";
  if (slope != 1.0) name << ':' << slope;
  c.name = name.str();
  c.f = [slope](const Vec2&, double m) { return slope * m; };
  c.df = [slope](const Vec2&, double) { return slope; };
  c.lipschitz = std::abs(slope);
  c.monotone = slope > 0.0;
  return c;
}

CouplingModel arctan_coupling()
{
  CouplingModel c;
  c.name = "local:arctan";
  c.f = [](const Vec2&, double m) { return std::atan(m); };
  c.df = [](const Vec2&, double m) { return 1.0 / (1.0 + m * m); };
  c.lipschitz = 1.0;
  // df > 0 but not bounded away from zero uniformly in m
  c.monotone = true;
  return c;
}

CouplingModel nonlocal_coupling(CouplingModel local, int steps, double scale)
{
  if (local.kind != CouplingKind::local) throw std::invalid_argument("nonlocal_coupling: base must be local");
  if (steps < 1 || !(scale > 0.0)) throw std::invalid_argument("nonlocal_coupling: steps >= 1 and scale > 0 required");
  local.kind = CouplingKind::nonlocal;
  local.name = "non" + local.name;
  local.smoothing_steps = steps;
  local.smoothing_scale = scale;
  return local;
}

CouplingModel parse_coupling(std::string_view spec)
{
  const std::string s(spec);
  if (s == "zero") return zero_coupling();
  auto parse_base = [&](std::string_view rest) -> CouplingModel {
    if (rest == "arctan") return arctan_coupling();
    if (rest == "linear") return linear_coupling(1.0);
    if (rest.starts_with("linear:")) {
      const std::string arg(rest.substr(7));
      std::size_t used = 0;
      double c = 0.0;
      try {
        c = std::stod(arg, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != arg.size() || arg.empty()) throw std::invalid_argument("invalid coupling slope in '" + s + "'");
      return linear_coupling(c);
    }
    throw std::invalid_argument("unknown coupling '" + s + "'");
  };
  if (spec.starts_with("local:")) return parse_base(spec.substr(6));
  if (spec.starts_with("nonlocal:")) return nonlocal_coupling(parse_base(spec.substr(9)));
  throw std::invalid_argument("unknown coupling '" + s + "'");
}

Smoother::Smoother(const FeSpace& space, int steps, double scale) : steps_(steps)
{
  if (steps < 1 || !(scale > 0.0)) throw std::invalid_argument("Smoother: steps >= 1 and scale > 0 required");
  mass_ = assemble_mass(space);
  // lumped mass: row sums of the consistent mass matrix
  std::vector<Triplet> lumped;
  const Vector ones = Vector::Ones(space.n_free());
  const Vector rows = mass_ * ones;
  for (int i = 0; i < space.n_free(); ++i) lumped.push_back({i, i, rows[i]});
  const double sigma = scale * space.h() * space.h();
  system_ = SparseMatrix::from_triplets(space.n_free(), space.n_free(), std::move(lumped))
                .add(assemble_stiffness(space), sigma);
  factor_ = std::make_shared<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>(system_.to_eigen());
  if (factor_->info() != Eigen::Success) throw SolverError("Smoother: factorisation failed");
}

Vector Smoother::apply(const Vector& m) const
{
  Vector w = m;
  for (int k = 0; k < steps_; ++k) w = factor_->solve(mass_ * w);
  return w;
}

Vector coupling_load(const CouplingModel& coupling, const FeSpace& space, const Vector& w)
{
  space.check_size(w, "coupling_load");
  return assemble_load_pointwise(
      space, [&](int t, const Vec2& x, const std::array<double, 3>& bary) { return coupling.f(x, space.value(t, bary, w)); },
      3);
}

SparseMatrix coupling_derivative_mass(const CouplingModel& coupling, const FeSpace& space, const Vector& w)
{
  space.check_size(w, "coupling_derivative_mass");
  return assemble_weighted_mass(
      space,
      [&](int t, const Vec2& x, const std::array<double, 3>& bary) { return coupling.df(x, space.value(t, bary, w)); },
      3);
}

MonotonicityResult check_monotonicity(const CouplingModel& coupling, const FeSpace& space,
                                      std::span<const Vector> samples, int n_rho, std::uint64_t seed)
{
  if (coupling.kind != CouplingKind::local) throw std::invalid_argument("check_monotonicity: local coupling required");
  if (samples.empty()) throw std::invalid_argument("check_monotonicity: at least one density sample required");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  MonotonicityResult result;
  result.margin = std::numeric_limits<double>::infinity();
  result.min_sampled_quotient = std::numeric_limits<double>::infinity();
  for (const auto& m : samples) {
    const SparseMatrix w = coupling_derivative_mass(coupling, space, m);
    const Eigen::MatrixXd dense = w.to_dense();
    const Eigen::MatrixXd sym = 0.5 * (dense + dense.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw SolverError("check_monotonicity: eigenvalue solver failed");
    result.margin = std::min(result.margin, eig.eigenvalues().minCoeff());
    for (int k = 0; k < n_rho; ++k) {
      Vector rho(space.n_free());
      for (auto& v : rho) v = normal(rng);
      result.min_sampled_quotient = std::min(result.min_sampled_quotient, rho.dot(w * rho) / rho.squaredNorm());
    }
  }
  result.monotone = result.margin > 0.0;
  return result;
}

}  // namespace nsfem
