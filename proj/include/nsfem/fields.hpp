#ifndef NSFEM_FIELDS_HPP
#define NSFEM_FIELDS_HPP

#include <functional>
#include <string>

#include <Eigen/Core>

#include "nsfem/mesh.hpp"

namespace nsfem {

using Mat2 = Eigen::Matrix2d;
using ScalarField = std::function<double(const Vec2&)>;
using VectorField = std::function<Vec2(const Vec2&)>;
using MatrixField = std::function<Mat2(const Vec2&)>;

/// Smooth exact solution with homogeneous Dirichlet data, used to build
/// manufactured source terms.
struct ManufacturedSolution {
  std::string name;
  ScalarField value;
  VectorField gradient;
  MatrixField hessian;

  double laplacian(const Vec2& x) const { return hessian(x).trace(); }
};

/// u(x, y) = sin(pi x) sin(pi y)
ManufacturedSolution sinsin_solution();

/// Looks up a manufactured solution by name ("sinsin").
ManufacturedSolution manufactured_by_name(const std::string& name);

ScalarField constant_field(double value);

/// 16 x (1 - x) y (1 - y), the default initial density.
ScalarField bump_field();

}  // namespace nsfem

#endif  // NSFEM_FIELDS_HPP
