#include "nsfem/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "nsfem/errors.hpp"

namespace nsfem {

RateFit fit_rate(std::span<const double> hs, std::span<const double> errs)
{
  if (hs.size() != errs.size()) throw std::invalid_argument("fit_rate: hs and errs differ in length");
  if (hs.size() < 3) throw std::invalid_argument("fit_rate: at least three points required");
  const auto n = static_cast<double>(hs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (!(hs[i] > 0.0) || !(errs[i] > 0.0) || !std::isfinite(hs[i]) || !std::isfinite(errs[i]))
      throw std::invalid_argument("fit_rate: inputs must be finite and positive");
    mx += std::log(hs[i]);
    my += std::log(errs[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double dx = std::log(hs[i]) - mx;
    const double dy = std::log(errs[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_rate: mesh sizes must not all coincide");
  RateFit fit;
  fit.slope = sxy / sxx;
  const double ss_res = std::max(syy - fit.slope * sxy, 0.0);
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

namespace {

void check_spd(const Eigen::MatrixXd& g, const char* which)
{
  if (g.rows() != g.cols()) throw std::invalid_argument(std::string("GramPair: ") + which + " is not square");
  const double scale = std::max(g.cwiseAbs().maxCoeff(), 1.0);
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument(std::string("GramPair: ") + which + " is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string("GramPair: ") + which + " is not positive definite");
}

double rayleigh(const Eigen::MatrixXd& a, const GramPair& grams, const Eigen::VectorXd& x)
{
  const Eigen::VectorXd ax = a * x;
  const double num = ax.dot(grams.y() * ax);
  const double den = x.dot(grams.x() * x);
  return std::sqrt(std::max(num, 0.0) / den);
}

Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> generalized_svd(const Eigen::MatrixXd& a,
                                                                           const GramPair& grams)
{
  if (a.cols() != grams.x().rows() || a.rows() != grams.y().rows())
    throw std::invalid_argument("banach_constant: matrix shape does not match the Gram pair");
  Eigen::MatrixXd normal = a.transpose() * grams.y() * a;
  normal = 0.5 * (normal + normal.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal, grams.x());
  if (eig.info() != Eigen::Success) throw SolverError("banach_constant: generalized eigensolver failed");
  return eig;
}

}  // namespace

GramPair::GramPair(Eigen::MatrixXd gram_x, Eigen::MatrixXd gram_y) : gram_x_(std::move(gram_x)), gram_y_(std::move(gram_y))
{
  check_spd(gram_x_, "gram_X");
  check_spd(gram_y_, "gram_Y");
}

GramPair GramPair::identity(int cols, int rows)
{
  return GramPair(Eigen::MatrixXd::Identity(cols, cols), Eigen::MatrixXd::Identity(rows, rows));
}

double banach_constant(const Eigen::MatrixXd& a, const GramPair& grams)
{
  const auto eig = generalized_svd(a, grams);
  return rayleigh(a, grams, eig.eigenvectors().col(0));
}

double weighted_operator_norm(const Eigen::MatrixXd& a, const GramPair& grams)
{
  const auto eig = generalized_svd(a, grams);
  return rayleigh(a, grams, eig.eigenvectors().col(eig.eigenvectors().cols() - 1));
}

PerturbationResult perturbation_check(const Eigen::MatrixXd& t, const Eigen::MatrixXd& s, const GramPair& grams)
{
  if (t.rows() != s.rows() || t.cols() != s.cols()) throw std::invalid_argument("perturbation_check: shape mismatch");
  PerturbationResult out;
  out.constant_t = banach_constant(t, grams);
  out.norm_s = weighted_operator_norm(s, grams);
  out.constant_ts = banach_constant(t + s, grams);
  out.slack = out.constant_ts - (out.constant_t - out.norm_s);
  out.holds = out.slack >= -1e-12;
  return out;
}

void StabilityScanReport::append(const StabilityScanReport& level)
{
  rows.insert(rows.end(), level.rows.begin(), level.rows.end());
  level_min.insert(level_min.end(), level.level_min.begin(), level.level_min.end());
  level_h.insert(level_h.end(), level.level_h.begin(), level.level_h.end());
  kink_elements.insert(kink_elements.end(), level.kink_elements.begin(), level.kink_elements.end());
  if (level_min.empty()) return;
  const auto [lo, hi] = std::minmax_element(level_min.begin(), level_min.end());
  min_smin = *lo;
  ratio = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
}

namespace {

SparseMatrix block_diagonal(const SparseMatrix& a, const SparseMatrix& b)
{
  auto t = a.triplets();
  for (auto e : b.triplets()) t.push_back({e.row + a.rows(), e.col + a.cols(), e.value});
  return SparseMatrix::from_triplets(a.rows() + b.rows(), a.cols() + b.cols(), std::move(t));
}

}  // namespace

double stability_constant(const MfgProblem& problem, const MfgState& state, const std::vector<Mat2>& xi,
                          const StabilityScanOptions& options)
{
  const MfgJacobian jac = mfg_jacobian(problem, state, &xi);
  const int size = jac.size();
  const SparseMatrix gram = block_diagonal(problem.stiffness().add(problem.mass()), problem.mass());
  const SparseMatrix lift = block_diagonal(problem.linear_matrix(), problem.linear_matrix());
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> gram_factor(gram.to_eigen());
  if (gram_factor.info() != Eigen::Success) throw SolverError("stability_constant: Gram factorisation failed");

  // x -> (B^T G B)^{-1} G x with B = L^{-1} J; self-adjoint in the G inner
  // product, its largest eigenvalue is 1 / smin^2
  auto inverse_op = [&](const Vector& x) {
    const Vector a = jac.solve_transpose(gram * x);
    const Vector b = gram_factor.solve(lift * a);
    return jac.solve(lift * b);
  };

  const Eigen::SparseMatrix<double> gram_e = gram.to_eigen();
  auto g_dot = [&](const Vector& x, const Vector& y) { return x.dot(gram_e * y); };

  const int m = std::min(options.krylov_dim, size);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  Vector start(size);
  for (auto& v : start) v = normal(rng);

  double mu = 0.0;
  for (int restart = 0; restart < options.max_iter; ++restart) {
    Eigen::MatrixXd basis(size, m);
    Vector alpha = Vector::Zero(m), beta = Vector::Zero(m);
    basis.col(0) = start / std::sqrt(g_dot(start, start));
    int k = 0;
    while (true) {
      Vector w = inverse_op(basis.col(k));
      alpha[k] = g_dot(basis.col(k), w);
      // full reorthogonalisation, twice
      for (int pass = 0; pass < 2; ++pass) {
        const Vector coef = basis.leftCols(k + 1).transpose() * (gram_e * w);
        w -= basis.leftCols(k + 1) * coef;
      }
      beta[k] = std::sqrt(std::max(g_dot(w, w), 0.0));
      ++k;
      if (k == m || beta[k - 1] <= 1e-14 * std::abs(alpha[k - 1])) break;
      basis.col(k) = w / beta[k - 1];
    }

    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
    const double mu_new = eig.eigenvalues()(k - 1);
    if (!(mu_new > 0.0) || !std::isfinite(mu_new)) throw SolverError("stability_constant: invalid Ritz value");
    const Vector y = eig.eigenvectors().col(k - 1);
    // Lanczos residual of the top Ritz pair
    const double residual = beta[k - 1] * std::abs(y[k - 1]);
    const bool done = residual <= options.rtol * mu_new || (restart > 0 && std::abs(mu_new - mu) <= options.rtol * mu_new) ||
                      k < m;
    mu = mu_new;
    if (done) return 1.0 / std::sqrt(mu);
    start = basis.leftCols(k) * y;
  }
  throw SolverError("stability_constant: Lanczos did not converge", 1.0 / std::sqrt(mu));
}

double stability_constant_dense(const MfgProblem& problem, const MfgState& state, const std::vector<Mat2>& xi)
{
  const MfgJacobian jac = mfg_jacobian(problem, state, &xi);
  const Eigen::MatrixXd lift = block_diagonal(problem.linear_matrix(), problem.linear_matrix()).to_dense();
  const Eigen::MatrixXd b = lift.partialPivLu().solve(jac.to_dense());
  const Eigen::MatrixXd gram = block_diagonal(problem.stiffness().add(problem.mass()), problem.mass()).to_dense();
  return banach_constant(b, GramPair(gram, gram));
}

StabilityScanReport stability_scan(const MfgProblem& problem, const MfgState& state, const StabilityScanOptions& options)
{
  if (options.samples < 1) throw std::invalid_argument("stability_scan: at least one sample required");
  const FeSpace& space = problem.space();
  space.check_size(state.u, "stability_scan u");
  space.check_size(state.m, "stability_scan m");

  std::vector<std::vector<Mat2>> branches(static_cast<std::size_t>(space.num_elements()));
  int kinks = 0;
  for (int t = 0; t < space.num_elements(); ++t) {
    auto& b = branches[static_cast<std::size_t>(t)];
    b = problem.model().hp_extremes(space.element(t).centroid, space.gradient(t, state.u), options.kink_band);
    if (b.empty()) throw std::logic_error("stability_scan: empty selection set");
    if (b.size() > 1) ++kinks;
  }

  std::vector<double> lambdas = options.lambdas;
  if (lambdas.empty()) lambdas.push_back(problem.lambda());

  StabilityScanReport level;
  double level_min = std::numeric_limits<double>::infinity();
  for (double lambda : lambdas) {
    const MfgProblem p = lambda == problem.lambda() ? problem : problem.with_lambda(lambda);
    for (int k = 0; k < options.samples; ++k) {
      const double t = options.samples == 1 ? 0.0 : static_cast<double>(k) / (options.samples - 1);
      std::vector<Mat2> xi(branches.size());
      for (std::size_t e = 0; e < branches.size(); ++e)
        xi[e] = branches[e].size() == 1 ? branches[e][0] : Mat2((1.0 - t) * branches[e][0] + t * branches[e][1]);
      const double smin = stability_constant(p, state, xi, options);
      level.rows.push_back({space.h(), k, smin, lambda});
      level_min = std::min(level_min, smin);
    }
  }

  StabilityScanReport out;
  StabilityScanReport single;
  single.rows = std::move(level.rows);
  single.level_min = {level_min};
  single.level_h = {space.h()};
  single.kink_elements = {kinks};
  out.append(single);
  return out;
}

}  // namespace nsfem
