#include "nsfem/hamiltonian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "nsfem/errors.hpp"

namespace nsfem {

HamiltonianModel::HamiltonianModel(Parts parts) : parts_(std::move(parts))
{
  if (!parts_.eval || !parts_.clarke_selection) throw std::invalid_argument("HamiltonianModel: eval and selection required");
  if (!(parts_.lipschitz >= 0.0) || !std::isfinite(parts_.lipschitz))
    throw std::invalid_argument("HamiltonianModel: Lipschitz constant must be finite and >= 0");
  if (parts_.hp && !parts_.hp_selection)
    throw std::invalid_argument("HamiltonianModel: H_p requires a Jacobian selection");
}

Vec2 HamiltonianModel::hp(const Vec2& x, const Vec2& z) const
{
  if (!parts_.hp) throw std::logic_error("Hamiltonian '" + name() + "' does not provide H_p");
  return parts_.hp(x, z);
}

Mat2 HamiltonianModel::hp_selection(const Vec2& x, const Vec2& z) const
{
  if (!parts_.hp_selection) throw std::logic_error("Hamiltonian '" + name() + "' does not provide a H_p selection");
  return parts_.hp_selection(x, z);
}

std::vector<Mat2> HamiltonianModel::hp_extremes(const Vec2& x, const Vec2& z, double band) const
{
  if (parts_.hp_extremes) return parts_.hp_extremes(x, z, band);
  return {hp_selection(x, z)};
}

HamiltonianModel zero_model()
{
  HamiltonianModel::Parts p;
  p.name = "zero";
  p.eval = [](const Vec2&, const Vec2&) { return 0.0; };
  p.clarke_selection = [](const Vec2&, const Vec2&) { return Vec2(Vec2::Zero()); };
  p.lipschitz = 0.0;
  p.hp = p.clarke_selection;
  p.hp_selection = [](const Vec2&, const Vec2&) { return Mat2(Mat2::Zero()); };
  p.convex = true;
  return HamiltonianModel(std::move(p));
}

HamiltonianModel eikonal_model()
{
  HamiltonianModel::Parts p;
  p.name = "eikonal";
  p.eval = [](const Vec2&, const Vec2& z) { return z.norm(); };
  p.clarke_selection = [](const Vec2&, const Vec2& z) {
    const double r = z.norm();
    return r > 0.0 ? Vec2(z / r) : Vec2(Vec2::Zero());
  };
  p.lipschitz = 1.0;
  p.convex = true;
  return HamiltonianModel(std::move(p));
}

HamiltonianModel max_affine_model(std::vector<AffinePiece> pieces)
{
  if (pieces.empty()) throw std::invalid_argument("max_affine: at least one piece required");
  double c = 0.0;
  for (const auto& piece : pieces) {
    if (!piece.slope.allFinite() || !std::isfinite(piece.offset))
      throw std::invalid_argument("max_affine: non-finite piece");
    c = std::max(c, piece.slope.norm());
  }
  auto active = [pieces](const Vec2& z) {
    std::size_t best = 0;
    double best_value = pieces[0].slope.dot(z) + pieces[0].offset;
    for (std::size_t i = 1; i < pieces.size(); ++i) {
      const double v = pieces[i].slope.dot(z) + pieces[i].offset;
      if (v > best_value) {
        best = i;
        best_value = v;
      }
    }
    return std::pair{best, best_value};
  };

  HamiltonianModel::Parts p;
  p.name = "maxaffine";
  p.eval = [active](const Vec2&, const Vec2& z) { return active(z).second; };
  p.clarke_selection = [active, pieces](const Vec2&, const Vec2& z) { return pieces[active(z).first].slope; };
  p.lipschitz = c;
  p.convex = true;
  return HamiltonianModel(std::move(p));
}

HamiltonianModel huber_model(double delta)
{
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("huber: delta must be positive");
  auto inner = [delta]() { return Mat2(Mat2::Identity() / delta); };
  auto outer = [](const Vec2& z) {
    const double r = z.norm();
    return Mat2((Mat2::Identity() - z * z.transpose() / (r * r)) / r);
  };

  HamiltonianModel::Parts p;
  p.name = "huber";
  p.eval = [delta](const Vec2&, const Vec2& z) {
    const double r = z.norm();
    return r <= delta ? r * r / (2.0 * delta) : r - 0.5 * delta;
  };
  p.clarke_selection = [delta](const Vec2&, const Vec2& z) {
    const double r = z.norm();
    return r <= delta ? Vec2(z / delta) : Vec2(z / r);
  };
  p.hp = p.clarke_selection;
  p.hp_selection = [delta, inner, outer](const Vec2&, const Vec2& z) {
    return z.norm() <= delta ? inner() : outer(z);
  };
  p.hp_extremes = [delta, inner, outer](const Vec2&, const Vec2& z, double band) {
    const double r = z.norm();
    if (std::abs(r - delta) <= band * delta) {
      // both branches are limits of Jacobians near the sphere |z| = delta
      const Vec2 dir = r > 0.0 ? Vec2(z / r) : Vec2(1.0, 0.0);
      return std::vector<Mat2>{inner(), outer(dir * delta)};
    }
    return std::vector<Mat2>{r <= delta ? inner() : outer(z)};
  };
  p.lipschitz = std::max(1.0, 1.0 / delta);
  p.convex = true;
  return HamiltonianModel(std::move(p));
}

std::vector<AffinePiece> read_affine_pieces(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open max-affine file '" + path + "'");
  std::vector<AffinePiece> pieces;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double a1 = 0.0;
    double a2 = 0.0;
    double b = 0.0;
    if (!(fields >> a1 >> a2 >> b))
      throw std::invalid_argument("max-affine file '" + path + "': malformed line " + std::to_string(lineno));
    pieces.push_back({Vec2(a1, a2), b});
  }
  return pieces;
}

HamiltonianModel parse_hamiltonian(std::string_view spec)
{
  const auto colon = spec.find(':');
  const std::string head(spec.substr(0, colon));
  const std::string arg = colon == std::string_view::npos ? std::string() : std::string(spec.substr(colon + 1));
  if (head == "zero" && arg.empty()) return zero_model();
  if (head == "eikonal" && arg.empty()) return eikonal_model();
  if (head == "huber") {
    if (arg.empty()) return huber_model(1.0);
    std::size_t used = 0;
    double delta = 0.0;
    try {
      delta = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != arg.size() || !(delta > 0.0))
      throw std::invalid_argument("invalid huber width in hamiltonian '" + std::string(spec) + "'");
    return huber_model(delta);
  }
  if (head == "maxaffine" && !arg.empty()) return max_affine_model(read_affine_pieces(arg));
  throw std::invalid_argument("unknown hamiltonian '" + std::string(spec) + "'");
}

namespace {

// Gauss-Kronrod 7/15 on [-1, 1]
constexpr std::array<double, 8> kXgk{0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                     0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                     0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                     0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk{0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                     0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                     0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                     0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg{0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  Vec2 kronrod;
  double error;
};

template <class F>
Panel gk15(const F& f, double a, double b)
{
  const double c = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  Vec2 k = kWgk[7] * f(c);
  Vec2 g = kWg[3] * f(c);
  for (int j = 0; j < 7; ++j) {
    const Vec2 sum = f(c - half * kXgk[j]) + f(c + half * kXgk[j]);
    k += kWgk[j] * sum;
    if (j % 2 == 1) g += kWg[j / 2] * sum;
  }
  return {half * k, half * (k - g).norm()};
}

}  // namespace

Vec2 mean_value_matrix(const HamiltonianModel& model, const Vec2& x, const Vec2& z1, const Vec2& z2)
{
  const Vec2 d = z1 - z2;
  const double dd = d.squaredNorm();
  if (dd == 0.0) return model.clarke_selection(x, z1);

  auto integrand = [&](double t) { return model.clarke_selection(x, z2 + t * d); };
  const double scale = std::max(model.lipschitz(), 1.0);
  // the selection is only known to ~eps * |z| / |z - 0| near cancellation
  // points of z2 + t d, so the tolerance sits well above that noise floor
  const double tol = 1e-11 * scale;
  // next to a crossing of the origin, z2 + t d carries roundoff of order
  // eps |z| that does not shrink with the panel; accept panels at that level
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * scale * (z1.norm() + z2.norm()) / std::sqrt(dd);
  constexpr int kMaxPanels = 200000;
  constexpr double kMinWidth = 1e-15;

  // depth-first adaptive subdivision; jumps of the selection get isolated
  // into panels of width ~1e-15 where their contribution is negligible
  Vec2 integral = Vec2::Zero();
  std::vector<std::pair<double, double>> stack{{0.0, 1.0}};
  int panels = 0;
  while (!stack.empty()) {
    const auto [a, b] = stack.back();
    stack.pop_back();
    if (++panels > kMaxPanels) throw SolverError("mean_value_matrix: quadrature did not converge");
    const Panel p = gk15(integrand, a, b);
    if (!p.kronrod.allFinite()) throw SolverError("mean_value_matrix: non-finite selection on segment");
    if (p.error <= std::max(tol * (b - a), floor) || b - a <= kMinWidth) {
      integral += p.kronrod;
      continue;
    }
    const double mid = 0.5 * (a + b);
    stack.emplace_back(mid, b);
    stack.emplace_back(a, mid);
  }

  const double secant = model(x, z1) - model(x, z2);
  return integral + ((secant - integral.dot(d)) / dd) * d;
}

std::vector<Vec2> selection_field(const HamiltonianModel& model, const FeSpace& space, const Vector& u)
{
  space.check_size(u, "selection_field");
  std::vector<Vec2> out(static_cast<std::size_t>(space.num_elements()));
  for (int t = 0; t < space.num_elements(); ++t)
    out[static_cast<std::size_t>(t)] = model.clarke_selection(space.element(t).centroid, space.gradient(t, u));
  return out;
}

std::vector<Vec2> hp_field(const HamiltonianModel& model, const FeSpace& space, const Vector& u)
{
  space.check_size(u, "hp_field");
  std::vector<Vec2> out(static_cast<std::size_t>(space.num_elements()));
  for (int t = 0; t < space.num_elements(); ++t)
    out[static_cast<std::size_t>(t)] = model.hp(space.element(t).centroid, space.gradient(t, u));
  return out;
}

std::vector<Mat2> hp_selection_field(const HamiltonianModel& model, const FeSpace& space, const Vector& u)
{
  space.check_size(u, "hp_selection_field");
  std::vector<Mat2> out(static_cast<std::size_t>(space.num_elements()));
  for (int t = 0; t < space.num_elements(); ++t)
    out[static_cast<std::size_t>(t)] = model.hp_selection(space.element(t).centroid, space.gradient(t, u));
  return out;
}

}  // namespace nsfem
