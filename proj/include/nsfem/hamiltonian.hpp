#ifndef NSFEM_HAMILTONIAN_HPP
#define NSFEM_HAMILTONIAN_HPP

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "nsfem/fem.hpp"
#include "nsfem/fields.hpp"

namespace nsfem {

/// One affine piece a . z + b of a max-affine Hamiltonian.
struct AffinePiece {
  Vec2 slope;
  double offset;
};

/// A Hamiltonian H(x, z) together with deterministic selections of its
/// Clarke generalized Jacobian.
///
/// `clarke_selection` returns one element of the Clarke gradient of
/// H(x, .) at z; where H(x, .) is differentiable it is the gradient. Models
/// used for mean field games additionally carry H_p and a selection of the
/// Clarke Jacobian of H_p. Every built-in documents its tie-break on the
/// kink set.
class HamiltonianModel {
public:
  using Eval = std::function<double(const Vec2& x, const Vec2& z)>;
  using Selection = std::function<Vec2(const Vec2& x, const Vec2& z)>;
  using HpSelection = std::function<Mat2(const Vec2& x, const Vec2& z)>;
  /// Extreme points of the Clarke Jacobian of H_p over a relative band
  /// around z; a single matrix away from kinks.
  using HpExtremes = std::function<std::vector<Mat2>(const Vec2& x, const Vec2& z, double band)>;

  struct Parts {
    std::string name;
    Eval eval;
    Selection clarke_selection;
    double lipschitz = 0.0;
    Selection hp;
    HpSelection hp_selection;
    HpExtremes hp_extremes;
    bool convex = false;
  };

  explicit HamiltonianModel(Parts parts);

  const std::string& name() const noexcept { return parts_.name; }
  double operator()(const Vec2& x, const Vec2& z) const { return parts_.eval(x, z); }
  Vec2 clarke_selection(const Vec2& x, const Vec2& z) const { return parts_.clarke_selection(x, z); }
  /// C_H: bounds |H(x,z1) - H(x,z2)| / |z1 - z2|, |xi|, and (when present) |H_p| and Lip(H_p).
  double lipschitz() const noexcept { return parts_.lipschitz; }
  bool is_convex() const noexcept { return parts_.convex; }

  bool has_hp() const noexcept { return static_cast<bool>(parts_.hp); }
  Vec2 hp(const Vec2& x, const Vec2& z) const;
  Mat2 hp_selection(const Vec2& x, const Vec2& z) const;
  std::vector<Mat2> hp_extremes(const Vec2& x, const Vec2& z, double band) const;

private:
  Parts parts_;
};

/// H = 0; H_p = 0.
HamiltonianModel zero_model();
/// H = |z|; selection z/|z|, and 0 at the origin.
HamiltonianModel eikonal_model();
/// H = max_i (a_i . z + b_i); selection a_i for the lowest active index.
HamiltonianModel max_affine_model(std::vector<AffinePiece> pieces);
/// Huber function with width delta. H_p = z/delta inside, z/|z| outside;
/// its Jacobian selection is I/delta for |z| <= delta (inner branch on the
/// sphere) and (I - z z^T/|z|^2)/|z| outside.
HamiltonianModel huber_model(double delta);

/// "zero", "eikonal", "huber[:delta]", "maxaffine:<csv file with rows a1,a2,b>".
HamiltonianModel parse_hamiltonian(std::string_view spec);
std::vector<AffinePiece> read_affine_pieces(const std::string& path);

/// Row vector A with A . (z1 - z2) = H(x,z1) - H(x,z2): the segment average
/// of Clarke selections (adaptive Gauss-Kronrod) plus a rank-one correction
/// along z1 - z2 that makes the secant identity exact. Test oracle only.
Vec2 mean_value_matrix(const HamiltonianModel& model, const Vec2& x, const Vec2& z1, const Vec2& z2);

/// xi_T = clarke_selection(centroid(T), Du_h|_T) per element.
std::vector<Vec2> selection_field(const HamiltonianModel& model, const FeSpace& space, const Vector& u);
/// H_p(centroid(T), Du_h|_T) per element.
std::vector<Vec2> hp_field(const HamiltonianModel& model, const FeSpace& space, const Vector& u);
/// Selection of the Clarke Jacobian of H_p per element.
std::vector<Mat2> hp_selection_field(const HamiltonianModel& model, const FeSpace& space, const Vector& u);

}  // namespace nsfem

#endif  // NSFEM_HAMILTONIAN_HPP
