#pragma once

#include <stdexcept>
#include <string>

namespace nsopt {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Construction-time violations of expression invariants.
struct InvalidExpr : Error {
  using Error::Error;
};

// Input dimension does not match the expression / constraint dimension.
struct DimensionMismatch : Error {
  using Error::Error;
};

// Evaluation outside an admissible domain (e.g. sq+ fed a negative value).
struct DomainError : Error {
  using Error::Error;
};

// Minkowski / composition cross product exceeded max_generators.
struct GeneratorBlowup : Error {
  using Error::Error;
};

// The multiplier system is infeasible: the point is not a KKT point.
struct NoKktPoint : Error {
  using Error::Error;
};

// Active constraint normals are linearly dependent; the multiplier set
// is unbounded and the independence assumption is violated.
struct UnboundedMultipliers : Error {
  using Error::Error;
};

// Objective is not representable as a convex piecewise-linear epigraph.
struct NotPiecewiseLinear : Error {
  using Error::Error;
};

// A quadratic leaf with an indefinite Q reached a convex-only solver.
struct NonConvexLeaf : Error {
  using Error::Error;
};

// Dykstra sweeps failed to converge onto the feasible set.
struct ProjectionFailure : Error {
  using Error::Error;
};

// Grid oracle called with more dimensions than it enumerates.
struct DimensionTooLarge : Error {
  using Error::Error;
};

// Provider cost form not supported by the requested transformation.
struct UnsupportedCost : Error {
  using Error::Error;
};

// The unperturbed base problem could not be solved.
struct BaseUnsolved : Error {
  using Error::Error;
};

// Fewer perturbation rows than the requested tail length.
struct InsufficientRows : Error {
  using Error::Error;
};

// Malformed problem / scenario document.
struct ParseError : Error {
  using Error::Error;
};

}  // namespace nsopt
