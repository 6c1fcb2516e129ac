#ifndef NSFEM_QUADRATURE_HPP
#define NSFEM_QUADRATURE_HPP

#include <array>
#include <span>

namespace nsfem {

/// One point of a triangle rule: barycentric coordinates and a weight
/// normalised so the weights of a rule sum to one (multiply by |T|).
struct QuadraturePoint {
  std::array<double, 3> bary;
  double weight;
};

/// Symmetric triangle rules. Order 1: centroid. Order 2: three interior
/// points, exact for quadratics. Order 3: six-point Dunavant rule, exact up
/// to degree 4 with positive weights.
std::span<const QuadraturePoint> triangle_rule(int order);

}  // namespace nsfem

#endif  // NSFEM_QUADRATURE_HPP
