#include "nsfem/fields.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nsfem {

ManufacturedSolution sinsin_solution()
{
  constexpr double pi = std::numbers::pi;
  ManufacturedSolution s;
  s.name = "sinsin";
  s.value = [](const Vec2& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); };
  s.gradient = [](const Vec2& x) {
    return Vec2(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()), pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
  };
  s.hessian = [](const Vec2& x) {
    const double ss = std::sin(pi * x.x()) * std::sin(pi * x.y());
    const double cc = std::cos(pi * x.x()) * std::cos(pi * x.y());
    Mat2 h;
    h << -pi * pi * ss, pi * pi * cc, pi * pi * cc, -pi * pi * ss;
    return h;
  };
  return s;
}

ManufacturedSolution manufactured_by_name(const std::string& name)
{
  if (name == "sinsin") return sinsin_solution();
  throw std::invalid_argument("unknown manufactured solution '" + name + "'");
}

ScalarField constant_field(double value)
{
  return [value](const Vec2&) { return value; };
}

ScalarField bump_field()
{
  return [](const Vec2& x) { return 16.0 * x.x() * (1.0 - x.x()) * x.y() * (1.0 - x.y()); };
}

}  // namespace nsfem
