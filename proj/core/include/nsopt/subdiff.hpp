#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nsopt/expr.hpp"

namespace nsopt {

struct Tolerances {
  double eps_active = 1e-8;
  double eps_dedup = 1e-12;
  int max_generators = 10000;
};

/// A subdifferential (or Clarke gradient) represented as the convex hull of
/// finitely many generator vectors. Generators are kept sorted
/// lexicographically and deduplicated, so the representation is canonical
/// and the first generator is the lexicographic minimum.
class GeneratorPolytope {
 public:
  explicit GeneratorPolytope(std::vector<Vec> generators, double dedup_tol = 1e-12);

  const std::vector<Vec>& generators() const { return gens_; }
  int dim() const { return static_cast<int>(gens_.front().size()); }
  int size() const { return static_cast<int>(gens_.size()); }

  /// Support function max over generators of g'd (the max over the hull is
  /// attained at a generator).
  double support(const Vec& d) const;

 private:
  std::vector<Vec> gens_;
};

/// Indices of the children (max node) or pieces (univariate node) that are
/// active at x under the relative tolerance eps_active.
using ActiveSet = std::vector<int>;

ActiveSet active_set(const FuncExpr& node, const Vec& x, const Tolerances& tol = {});

GeneratorPolytope subdifferential(const FuncExpr& f, const Vec& x,
                                  const Tolerances& tol = {});

/// f'(x; d) = max over generators of xi'd.
double dir_deriv(const FuncExpr& f, const Vec& x, const Vec& d,
                 const Tolerances& tol = {});

/// Clarke directional derivative; coincides with dir_deriv on the regular
/// classes this tree grammar admits.
double clarke_dir_deriv(const FuncExpr& f, const Vec& x, const Vec& d,
                        const Tolerances& tol = {});

/// Sampled difference-quotient estimate of the Clarke directional derivative:
/// max over base points y in a ball around x and step sizes t on a geometric
/// grid [tmin, radius] of (f(y + t d) - f(y)) / t. Deterministic given seed.
double clarke_dir_estimate(const std::function<double(const Vec&)>& fn, const Vec& x,
                           const Vec& d, double radius, int samples, double tmin,
                           std::uint64_t seed);

struct RegularityReport {
  bool pass = true;
  double max_kink_violation = 0.0;   // breakpoint slope-order violations
  double max_dir_mismatch = 0.0;     // |formula - one-sided finite difference|
  std::vector<std::string> notes;
};

/// Checks that the tree is regular at x: every univariate node has
/// nondecreasing one-sided slopes at its breakpoints, and the generator
/// formula for f'(x; .) matches one-sided finite-difference quotients along
/// the supplied directions within dir_tol.
RegularityReport regularity_check(const FuncExpr& f, const Vec& x,
                                  const std::vector<Vec>& dirs,
                                  const Tolerances& tol = {}, double dir_tol = 1e-6);

/// |f(x + t d) - f(x) - t f'(x; d)|, the first-order expansion residual.
double expansion_residual(const FuncExpr& f, const Vec& x, const Vec& d, double t,
                          const Tolerances& tol = {});

}  // namespace nsopt
