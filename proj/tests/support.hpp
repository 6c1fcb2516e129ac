// Helpers shared by the unit tests.
#ifndef NSFEM_TESTS_SUPPORT_HPP
#define NSFEM_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <random>

#include "nsfem/fem.hpp"
#include "nsfem/fields.hpp"

namespace nsfem::test {

/// Evaluates a P1 coefficient vector on unit_square_mesh(n) at any point by
/// locating the structured cell, independently of FeSpace::value.
class GridFunction {
public:
  GridFunction(const FeSpace& space, int n, Vector u) : space_(&space), n_(n), u_(std::move(u)) {}

  double value(const Vec2& x) const
  {
    const auto c = locate(x);
    if (c.lower) return c.u00 + c.s * (c.u10 - c.u00) + c.t * (c.u11 - c.u10);
    return c.u00 + c.t * (c.u01 - c.u00) + c.s * (c.u11 - c.u01);
  }

  Vec2 gradient(const Vec2& x) const
  {
    const auto c = locate(x);
    if (c.lower) return n_ * Vec2(c.u10 - c.u00, c.u11 - c.u10);
    return n_ * Vec2(c.u11 - c.u01, c.u01 - c.u00);
  }

  ScalarField as_field() const
  {
    return [this](const Vec2& x) { return value(x); };
  }
  VectorField as_gradient() const
  {
    return [this](const Vec2& x) { return gradient(x); };
  }

private:
  struct Cell {
    double s, t, u00, u10, u01, u11;
    bool lower;
  };

  double at(int i, int j) const
  {
    const int d = space_->dof_of_vertex(j * (n_ + 1) + i);
    return d < 0 ? 0.0 : u_[d];
  }

  Cell locate(const Vec2& x) const
  {
    const int i = std::clamp(static_cast<int>(std::floor(x.x() * n_)), 0, n_ - 1);
    const int j = std::clamp(static_cast<int>(std::floor(x.y() * n_)), 0, n_ - 1);
    Cell c{};
    c.s = x.x() * n_ - i;
    c.t = x.y() * n_ - j;
    c.u00 = at(i, j);
    c.u10 = at(i + 1, j);
    c.u01 = at(i, j + 1);
    c.u11 = at(i + 1, j + 1);
    c.lower = c.s >= c.t;
    return c;
  }

  const FeSpace* space_;
  int n_;
  Vector u_;
};

inline Vector random_vector(std::mt19937_64& rng, int n, double scale = 1.0)
{
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

inline Vec2 random_point(std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return {unit(rng), unit(rng)};
}

}  // namespace nsfem::test

#endif  // NSFEM_TESTS_SUPPORT_HPP
