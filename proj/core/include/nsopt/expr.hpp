#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <variant>
#include <vector>

#include "nsopt/errors.hpp"

namespace nsopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class FuncExpr;
using ExprPtr = std::shared_ptr<const FuncExpr>;

/// Univariate polynomial of degree <= 3, coefficients stored low-to-high.
class Poly {
 public:
  Poly() : c_{0.0} {}
  explicit Poly(std::vector<double> coeffs);

  double operator()(double x) const;
  double deriv(double x) const;
  Poly derivative() const;
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<double>& coeffs() const { return c_; }

 private:
  std::vector<double> c_;
};

/// Continuous piecewise-polynomial function of one real variable.
/// Piece i applies on [breaks[i-1], breaks[i]) with the half-open
/// convention; piece 0 extends to -inf, the last piece to +inf.
struct PwFunc {
  std::vector<double> breaks;  // strictly increasing, size = pieces - 1
  std::vector<Poly> pieces;

  int piece_index(double x) const;
  double value(double x) const;
  // One-sided slopes at x; they differ only at a breakpoint.
  double slope_left(double x) const;
  double slope_right(double x) const;
};

// -- expression tree nodes ---------------------------------------------------

struct Affine {
  Vec c;
  double d0 = 0.0;
};

// Value is 0.5 x'Qx + c'x + d0 with Q symmetric; gradient Qx + c.
struct Quadratic {
  Mat Q;
  Vec c;
  double d0 = 0.0;
};

struct MaxNode {
  std::vector<ExprPtr> children;  // at least one
};

struct SumTerm {
  double weight = 1.0;  // nonnegative
  ExprPtr child;
};

struct SumNode {
  std::vector<SumTerm> terms;
};

enum class Phi { Id, Exp, SqPos };

struct CompTerm {
  double coeff = 1.0;  // nonnegative, keeps the outer map monotone
  Phi phi = Phi::Id;
  ExprPtr child;
};

// Outer map g(y) = c0 + sum_i coeff_i * phi_i(y_i), increasing in each y_i.
struct CompNode {
  double c0 = 0.0;
  std::vector<CompTerm> terms;
};

struct PwUniNode {
  int var = 0;  // coordinate index the function depends on
  PwFunc f;
};

/// Immutable expression tree over the supported nonsmooth function classes:
/// pointwise maxima of smooth pieces, nonnegative sums, monotone smooth
/// compositions and univariate piecewise-polynomial functions.
class FuncExpr {
 public:
  using Node = std::variant<Affine, Quadratic, MaxNode, SumNode, CompNode, PwUniNode>;

  FuncExpr(Node node, int dim);  // validates structural invariants

  int dim() const { return dim_; }
  const Node& node() const { return node_; }

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&node_);
  }

 private:
  Node node_;
  int dim_;
};

// -- factories ---------------------------------------------------------------

ExprPtr affine(Vec c, double d0 = 0.0);
ExprPtr quadratic(Mat Q, Vec c, double d0 = 0.0);
ExprPtr max_of(std::vector<ExprPtr> children);
ExprPtr weighted_sum(std::vector<SumTerm> terms);
ExprPtr composition(double c0, std::vector<CompTerm> terms);
ExprPtr pw_univariate(int var, std::vector<double> breaks, std::vector<Poly> pieces,
                      int dim);

// -- operations ----------------------------------------------------------------

double phi_value(Phi phi, double y);   // throws DomainError for SqPos on y < 0
double phi_deriv(Phi phi, double y);

/// Exact recursive evaluation.
double eval(const FuncExpr& f, const Vec& x);

/// -f for trees made of leaves, sums and univariate pieces. Max and
/// composition nodes have no negation inside the grammar and throw.
ExprPtr negated(const ExprPtr& f);

/// True when the tree evaluates to a piecewise-linear function that the
/// epigraph reformulation handles: affine leaves, maxima, nonnegative sums,
/// identity compositions and degree<=1 univariate pieces.
bool is_piecewise_linear(const FuncExpr& f);

/// Sufficient per-node convexity test (PSD leaves, convex pieces with
/// nondecreasing slopes at breakpoints, convex increasing outer maps).
bool is_convex(const FuncExpr& f);

/// Walks the tree and applies fn to every node (pre-order).
void visit(const FuncExpr& f, const std::function<void(const FuncExpr&)>& fn);

}  // namespace nsopt
