#pragma once

#include <stdexcept>
#include <string>

namespace kineq {

/// Base class for all kineq failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: out-of-range parameters, malformed configs.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Mismatched shapes: grids, dimensions, state lists.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Operation requested from a component that cannot perform it
/// (e.g. finite-state backend asked to integrate a diffusion).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// A coefficient read the measure path outside its dependence window.
class VisibilityError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, diverging quadrature, solver-internal numerics.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Test-function evaluation failed at a named atom.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// The contraction product c1*c2*c3*K*T is >= 1; the local solver refuses.
class LocalityError : public Error {
 public:
  LocalityError(const std::string& what, double product)
      : Error(what), product_(product) {}
  double product() const { return product_; }

 private:
  double product_;
};

}  // namespace kineq
