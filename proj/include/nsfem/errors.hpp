#ifndef NSFEM_ERRORS_HPP
#define NSFEM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nsfem {

/// Raised when a mesh violates the TriMesh invariants or cannot be parsed.
class MeshError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised by element loops; carries the offending element.
class AssemblyError : public std::runtime_error {
public:
  AssemblyError(const std::string& what, int element)
      : std::runtime_error(what + " (element " + std::to_string(element) + ")"), element_(element)
  {
  }
  int element() const noexcept { return element_; }

private:
  int element_;
};

/// A field or coefficient evaluated to NaN/Inf.
class NonFiniteError : public std::runtime_error {
public:
  NonFiniteError(const std::string& what, double x, double y)
      : std::runtime_error(what + " at (" + std::to_string(x) + ", " + std::to_string(y) + ")"), x_(x), y_(y)
  {
  }
  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }

private:
  double x_;
  double y_;
};

/// Linear or nonlinear solver failure (singular matrix, iteration cap).
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, double residual = -1.0)
      : std::runtime_error(what), residual_(residual)
  {
  }
  /// Final residual when known, negative otherwise.
  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

}  // namespace nsfem

#endif  // NSFEM_ERRORS_HPP
