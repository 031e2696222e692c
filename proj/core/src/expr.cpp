#include "nsopt/expr.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace nsopt {

namespace {

constexpr double kContinuityTol = 1e-9;

void require(bool cond, const char* msg) {
  if (!cond) throw InvalidExpr(msg);
}

bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace

// -- Poly ---------------------------------------------------------------------

Poly::Poly(std::vector<double> coeffs) : c_(std::move(coeffs)) {
  require(!c_.empty() && c_.size() <= 4, "polynomial needs 1..4 coefficients");
  for (double v : c_) require(std::isfinite(v), "polynomial coefficient not finite");
}

double Poly::operator()(double x) const {
  double r = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * x + *it;
  return r;
}

double Poly::deriv(double x) const {
  double r = 0.0;
  for (int k = static_cast<int>(c_.size()) - 1; k >= 1; --k) r = r * x + k * c_[k];
  return r;
}

Poly Poly::derivative() const {
  if (c_.size() == 1) return Poly({0.0});
  std::vector<double> d(c_.size() - 1);
  for (size_t k = 1; k < c_.size(); ++k) d[k - 1] = k * c_[k];
  return Poly(std::move(d));
}

// -- PwFunc ---------------------------------------------------------------------

int PwFunc::piece_index(double x) const {
  // Half-open pieces [a_i, a_{i+1}); upper_bound yields the count of breaks <= x.
  auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
  return static_cast<int>(it - breaks.begin());
}

double PwFunc::value(double x) const { return pieces[piece_index(x)](x); }

double PwFunc::slope_right(double x) const { return pieces[piece_index(x)].deriv(x); }

double PwFunc::slope_left(double x) const {
  int idx = piece_index(x);
  if (idx > 0 && x == breaks[idx - 1]) idx -= 1;  // left piece governs the left slope
  return pieces[idx].deriv(x);
}

// -- FuncExpr -------------------------------------------------------------------

FuncExpr::FuncExpr(Node node, int dim) : node_(std::move(node)), dim_(dim) {
  require(dim_ >= 1, "expression dimension must be positive");
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Affine>) {
          require(n.c.size() == dim_, "affine coefficient length != dim");
          require(all_finite(n.c) && std::isfinite(n.d0), "affine data not finite");
        } else if constexpr (std::is_same_v<T, Quadratic>) {
          require(n.Q.rows() == dim_ && n.Q.cols() == dim_, "Q must be dim x dim");
          require(n.c.size() == dim_, "quadratic c length != dim");
          require(n.Q.allFinite() && all_finite(n.c) && std::isfinite(n.d0),
                  "quadratic data not finite");
          require((n.Q - n.Q.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
                  "Q must be symmetric");
        } else if constexpr (std::is_same_v<T, MaxNode>) {
          require(!n.children.empty(), "max node needs at least one child");
          for (const auto& ch : n.children) {
            require(ch != nullptr, "max child is null");
            require(ch->dim() == dim_, "max child dimension mismatch");
          }
        } else if constexpr (std::is_same_v<T, SumNode>) {
          require(!n.terms.empty(), "sum node needs at least one term");
          for (const auto& t : n.terms) {
            require(t.child != nullptr, "sum child is null");
            require(t.child->dim() == dim_, "sum child dimension mismatch");
            require(std::isfinite(t.weight) && t.weight >= 0.0,
                    "sum weights must be nonnegative");
          }
        } else if constexpr (std::is_same_v<T, CompNode>) {
          require(!n.terms.empty(), "composition needs at least one term");
          require(std::isfinite(n.c0), "composition constant not finite");
          for (const auto& t : n.terms) {
            require(t.child != nullptr, "composition child is null");
            require(t.child->dim() == dim_, "composition child dimension mismatch");
            require(std::isfinite(t.coeff) && t.coeff >= 0.0,
                    "composition coefficients must be nonnegative");
          }
        } else if constexpr (std::is_same_v<T, PwUniNode>) {
          require(n.var >= 0 && n.var < dim_, "pwuni variable index out of range");
          const auto& pw = n.f;
          require(pw.pieces.size() == pw.breaks.size() + 1,
                  "pwuni needs one more piece than breakpoints");
          for (size_t i = 0; i + 1 < pw.breaks.size(); ++i)
            require(pw.breaks[i] < pw.breaks[i + 1],
                    "pwuni breakpoints must be strictly increasing");
          for (double b : pw.breaks) require(std::isfinite(b), "pwuni breakpoint not finite");
          for (size_t i = 0; i < pw.breaks.size(); ++i) {
            double a = pw.breaks[i];
            double lhs = pw.pieces[i](a), rhs = pw.pieces[i + 1](a);
            require(std::abs(lhs - rhs) <= kContinuityTol * (1.0 + std::abs(lhs)),
                    "pwuni pieces discontinuous at a breakpoint");
          }
        }
      },
      node_);
}

// -- factories ------------------------------------------------------------------

ExprPtr affine(Vec c, double d0) {
  int n = static_cast<int>(c.size());
  return std::make_shared<FuncExpr>(Affine{std::move(c), d0}, n);
}

ExprPtr quadratic(Mat Q, Vec c, double d0) {
  int n = static_cast<int>(c.size());
  return std::make_shared<FuncExpr>(Quadratic{std::move(Q), std::move(c), d0}, n);
}

ExprPtr max_of(std::vector<ExprPtr> children) {
  if (children.empty()) throw InvalidExpr("max node needs at least one child");
  int n = children.front() ? children.front()->dim() : 0;
  return std::make_shared<FuncExpr>(MaxNode{std::move(children)}, n);
}

ExprPtr weighted_sum(std::vector<SumTerm> terms) {
  if (terms.empty()) throw InvalidExpr("sum node needs at least one term");
  int n = terms.front().child ? terms.front().child->dim() : 0;
  return std::make_shared<FuncExpr>(SumNode{std::move(terms)}, n);
}

ExprPtr composition(double c0, std::vector<CompTerm> terms) {
  if (terms.empty()) throw InvalidExpr("composition needs at least one term");
  int n = terms.front().child ? terms.front().child->dim() : 0;
  return std::make_shared<FuncExpr>(CompNode{c0, std::move(terms)}, n);
}

ExprPtr pw_univariate(int var, std::vector<double> breaks, std::vector<Poly> pieces,
                      int dim) {
  return std::make_shared<FuncExpr>(
      PwUniNode{var, PwFunc{std::move(breaks), std::move(pieces)}}, dim);
}

// -- evaluation -------------------------------------------------------------------

double phi_value(Phi phi, double y) {
  switch (phi) {
    case Phi::Id:
      return y;
    case Phi::Exp:
      return std::exp(y);
    case Phi::SqPos:
      if (y < 0.0) throw DomainError("sq+ applied to a negative value");
      return y * y;
  }
  return 0.0;
}

double phi_deriv(Phi phi, double y) {
  switch (phi) {
    case Phi::Id:
      return 1.0;
    case Phi::Exp:
      return std::exp(y);
    case Phi::SqPos:
      if (y < 0.0) throw DomainError("sq+ applied to a negative value");
      return 2.0 * y;
  }
  return 0.0;
}

double eval(const FuncExpr& f, const Vec& x) {
  if (x.size() != f.dim()) throw DimensionMismatch("point dimension != expression dimension");
  if (!x.allFinite()) throw DomainError("point has non-finite coordinates");
  return std::visit(
      [&](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Affine>) {
          return n.c.dot(x) + n.d0;
        } else if constexpr (std::is_same_v<T, Quadratic>) {
          return 0.5 * x.dot(n.Q * x) + n.c.dot(x) + n.d0;
        } else if constexpr (std::is_same_v<T, MaxNode>) {
          double best = -std::numeric_limits<double>::infinity();
          for (const auto& ch : n.children) best = std::max(best, eval(*ch, x));
          return best;
        } else if constexpr (std::is_same_v<T, SumNode>) {
          double s = 0.0;
          for (const auto& t : n.terms) s += t.weight * eval(*t.child, x);
          return s;
        } else if constexpr (std::is_same_v<T, CompNode>) {
          double s = n.c0;
          for (const auto& t : n.terms) s += t.coeff * phi_value(t.phi, eval(*t.child, x));
          return s;
        } else {
          return n.f.value(x[n.var]);
        }
      },
      f.node());
}

// -- transformations ----------------------------------------------------------------

ExprPtr negated(const ExprPtr& f) {
  if (!f) throw InvalidExpr("negating a null expression");
  return std::visit(
      [&](const auto& n) -> ExprPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Affine>) {
          return affine(-n.c, -n.d0);
        } else if constexpr (std::is_same_v<T, Quadratic>) {
          return quadratic(-n.Q, -n.c, -n.d0);
        } else if constexpr (std::is_same_v<T, SumNode>) {
          std::vector<SumTerm> terms;
          terms.reserve(n.terms.size());
          for (const auto& t : n.terms) terms.push_back({t.weight, negated(t.child)});
          return weighted_sum(std::move(terms));
        } else if constexpr (std::is_same_v<T, PwUniNode>) {
          std::vector<Poly> pieces;
          pieces.reserve(n.f.pieces.size());
          for (const auto& p : n.f.pieces) {
            std::vector<double> c = p.coeffs();
            for (double& v : c) v = -v;
            pieces.emplace_back(std::move(c));
          }
          return pw_univariate(n.var, n.f.breaks, std::move(pieces), f->dim());
        } else {
          throw InvalidExpr("max/composition nodes cannot be negated inside the grammar");
        }
      },
      f->node());
}

bool is_piecewise_linear(const FuncExpr& f) {
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Affine>) {
          return true;
        } else if constexpr (std::is_same_v<T, Quadratic>) {
          return false;
        } else if constexpr (std::is_same_v<T, MaxNode>) {
          return std::all_of(n.children.begin(), n.children.end(),
                             [](const ExprPtr& c) { return is_piecewise_linear(*c); });
        } else if constexpr (std::is_same_v<T, SumNode>) {
          return std::all_of(n.terms.begin(), n.terms.end(),
                             [](const SumTerm& t) { return is_piecewise_linear(*t.child); });
        } else if constexpr (std::is_same_v<T, CompNode>) {
          return std::all_of(n.terms.begin(), n.terms.end(), [](const CompTerm& t) {
            return t.phi == Phi::Id && is_piecewise_linear(*t.child);
          });
        } else {
          return std::all_of(n.f.pieces.begin(), n.f.pieces.end(),
                             [](const Poly& p) { return p.degree() <= 1; });
        }
      },
      f.node());
}

namespace {

// Convexity of one piecewise piece on its (possibly unbounded) interval:
// p'' is linear in x, so checking the finite endpoints plus the sign of the
// cubic coefficient at infinite ends suffices.
bool piece_convex(const Poly& p, double lo, double hi) {
  const auto& c = p.coeffs();
  double c2 = c.size() > 2 ? c[2] : 0.0;
  double c3 = c.size() > 3 ? c[3] : 0.0;
  auto second = [&](double x) { return 2.0 * c2 + 6.0 * c3 * x; };
  bool lo_inf = !std::isfinite(lo), hi_inf = !std::isfinite(hi);
  if (lo_inf && c3 > 0.0) return false;
  if (hi_inf && c3 < 0.0) return false;
  if (!lo_inf && second(lo) < -1e-12) return false;
  if (!hi_inf && second(hi) < -1e-12) return false;
  if (lo_inf && hi_inf) return c3 == 0.0 && c2 >= 0.0;
  return true;
}

bool pwuni_convex(const PwUniNode& n) {
  const auto& pw = n.f;
  const double inf = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < pw.pieces.size(); ++i) {
    double lo = i == 0 ? -inf : pw.breaks[i - 1];
    double hi = i == pw.breaks.size() ? inf : pw.breaks[i];
    if (!piece_convex(pw.pieces[i], lo, hi)) return false;
  }
  // Slopes may only increase across a breakpoint.
  for (size_t i = 0; i < pw.breaks.size(); ++i) {
    double a = pw.breaks[i];
    if (pw.pieces[i].deriv(a) > pw.pieces[i + 1].deriv(a) + 1e-12) return false;
  }
  return true;
}

}  // namespace

bool is_convex(const FuncExpr& f) {
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Affine>) {
          return true;
        } else if constexpr (std::is_same_v<T, Quadratic>) {
          Eigen::SelfAdjointEigenSolver<Mat> es(n.Q, Eigen::EigenvaluesOnly);
          return es.eigenvalues().minCoeff() >= -1e-9;
        } else if constexpr (std::is_same_v<T, MaxNode>) {
          return std::all_of(n.children.begin(), n.children.end(),
                             [](const ExprPtr& c) { return is_convex(*c); });
        } else if constexpr (std::is_same_v<T, SumNode>) {
          return std::all_of(n.terms.begin(), n.terms.end(),
                             [](const SumTerm& t) { return is_convex(*t.child); });
        } else if constexpr (std::is_same_v<T, CompNode>) {
          // phi in {id, exp, sq+} is convex and nondecreasing on its domain,
          // so convex children keep the composition convex.
          return std::all_of(n.terms.begin(), n.terms.end(),
                             [](const CompTerm& t) { return is_convex(*t.child); });
        } else {
          return pwuni_convex(n);
        }
      },
      f.node());
}

void visit(const FuncExpr& f, const std::function<void(const FuncExpr&)>& fn) {
  fn(f);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, MaxNode>) {
          for (const auto& ch : n.children) visit(*ch, fn);
        } else if constexpr (std::is_same_v<T, SumNode>) {
          for (const auto& t : n.terms) visit(*t.child, fn);
        } else if constexpr (std::is_same_v<T, CompNode>) {
          for (const auto& t : n.terms) visit(*t.child, fn);
        }
      },
      f.node());
}

}  // namespace nsopt
