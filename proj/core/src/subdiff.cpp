#include "nsopt/subdiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace nsopt {

namespace {

bool lex_less(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

void check_point(const FuncExpr& f, const Vec& x) {
  if (x.size() != f.dim()) throw DimensionMismatch("point dimension != expression dimension");
  if (!x.allFinite()) throw DomainError("point has non-finite coordinates");
}

}  // namespace

GeneratorPolytope::GeneratorPolytope(std::vector<Vec> generators, double dedup_tol)
    : gens_(std::move(generators)) {
  if (gens_.empty()) throw InvalidExpr("generator polytope must be nonempty");
  const auto n = gens_.front().size();
  for (const auto& g : gens_) {
    if (g.size() != n) throw DimensionMismatch("generators of mixed dimension");
    if (!g.allFinite()) throw DomainError("generator with non-finite entries");
  }
  std::sort(gens_.begin(), gens_.end(), lex_less);
  std::vector<Vec> kept;
  kept.reserve(gens_.size());
  for (auto& g : gens_) {
    if (kept.empty() || (g - kept.back()).cwiseAbs().maxCoeff() > dedup_tol)
      kept.push_back(std::move(g));
  }
  gens_ = std::move(kept);
}

double GeneratorPolytope::support(const Vec& d) const {
  if (d.size() != gens_.front().size())
    throw DimensionMismatch("direction dimension != generator dimension");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& g : gens_) best = std::max(best, g.dot(d));
  return best;
}

ActiveSet active_set(const FuncExpr& node, const Vec& x, const Tolerances& tol) {
  check_point(node, x);
  if (const auto* mx = node.as<MaxNode>()) {
    ActiveSet out;
    std::vector<double> vals(mx->children.size());
    double top = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < mx->children.size(); ++i) {
      vals[i] = eval(*mx->children[i], x);
      top = std::max(top, vals[i]);
    }
    double slack = tol.eps_active * (1.0 + std::abs(top));
    for (size_t i = 0; i < vals.size(); ++i)
      if (top - vals[i] <= slack) out.push_back(static_cast<int>(i));
    return out;
  }
  if (const auto* pw = node.as<PwUniNode>()) {
    double v = x[pw->var];
    int idx = pw->f.piece_index(v);
    ActiveSet out{idx};
    if (idx > 0 && std::abs(v - pw->f.breaks[idx - 1]) <= tol.eps_active)
      out.insert(out.begin(), idx - 1);
    if (idx < static_cast<int>(pw->f.breaks.size()) &&
        std::abs(v - pw->f.breaks[idx]) <= tol.eps_active)
      out.push_back(idx + 1);
    return out;
  }
  // Leaves contribute a single piece; sum/composition terms all contribute.
  if (node.as<Affine>() || node.as<Quadratic>()) return {0};
  size_t k = node.as<SumNode>() ? node.as<SumNode>()->terms.size()
                                : node.as<CompNode>()->terms.size();
  ActiveSet out(k);
  for (size_t i = 0; i < k; ++i) out[i] = static_cast<int>(i);
  return out;
}

namespace {

std::vector<Vec> subdiff_generators(const FuncExpr& f, const Vec& x, const Tolerances& tol);

std::vector<Vec> cross_combine(const std::vector<std::vector<Vec>>& parts,
                               const std::vector<double>& weights, int dim,
                               const Tolerances& tol) {
  // All weighted sums picking one generator per part (Minkowski sum).
  size_t total = 1;
  for (const auto& p : parts) {
    total *= p.size();
    if (total > static_cast<size_t>(tol.max_generators))
      throw GeneratorBlowup("generator cross product exceeds max_generators");
  }
  std::vector<Vec> out;
  out.reserve(total);
  std::vector<size_t> idx(parts.size(), 0);
  for (size_t c = 0; c < total; ++c) {
    Vec g = Vec::Zero(dim);
    for (size_t i = 0; i < parts.size(); ++i) g += weights[i] * parts[i][idx[i]];
    out.push_back(std::move(g));
    for (size_t i = 0; i < parts.size(); ++i) {
      if (++idx[i] < parts[i].size()) break;
      idx[i] = 0;
    }
  }
  return out;
}

std::vector<Vec> subdiff_generators(const FuncExpr& f, const Vec& x, const Tolerances& tol) {
  if (const auto* a = f.as<Affine>()) return {a->c};
  if (const auto* q = f.as<Quadratic>()) return {q->Q * x + q->c};
  if (const auto* mx = f.as<MaxNode>()) {
    std::vector<Vec> out;
    for (int i : active_set(f, x, tol)) {
      auto child = subdiff_generators(*mx->children[i], x, tol);
      if (out.size() + child.size() > static_cast<size_t>(tol.max_generators))
        throw GeneratorBlowup("active-generator union exceeds max_generators");
      out.insert(out.end(), std::make_move_iterator(child.begin()),
                 std::make_move_iterator(child.end()));
    }
    return out;
  }
  if (const auto* sum = f.as<SumNode>()) {
    std::vector<std::vector<Vec>> parts;
    std::vector<double> weights;
    for (const auto& t : sum->terms) {
      parts.push_back(subdiff_generators(*t.child, x, tol));
      weights.push_back(t.weight);
    }
    return cross_combine(parts, weights, f.dim(), tol);
  }
  if (const auto* comp = f.as<CompNode>()) {
    // Chain rule for the monotone outer map: one generator per choice of a
    // child generator, scaled by dg/dy_i evaluated at the inner values.
    std::vector<std::vector<Vec>> parts;
    std::vector<double> weights;
    for (const auto& t : comp->terms) {
      double y = eval(*t.child, x);
      parts.push_back(subdiff_generators(*t.child, x, tol));
      weights.push_back(t.coeff * phi_deriv(t.phi, y));
    }
    return cross_combine(parts, weights, f.dim(), tol);
  }
  const auto* pw = f.as<PwUniNode>();
  const double v = x[pw->var];
  const int idx = pw->f.piece_index(v);
  ActiveSet pieces = active_set(f, x, tol);
  std::vector<Vec> out;
  for (int i : pieces) {
    // At a breakpoint the one-sided slopes are taken at the breakpoint
    // itself, not at the perturbed x.
    double at = v;
    if (i < idx)
      at = pw->f.breaks[i];
    else if (i > idx)
      at = pw->f.breaks[i - 1];
    else if (pieces.size() > 1)
      at = (pieces.front() < idx) ? pw->f.breaks[idx - 1] : pw->f.breaks[idx];
    Vec g = Vec::Zero(f.dim());
    g[pw->var] = pw->f.pieces[i].deriv(at);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

GeneratorPolytope subdifferential(const FuncExpr& f, const Vec& x, const Tolerances& tol) {
  check_point(f, x);
  return GeneratorPolytope(subdiff_generators(f, x, tol), tol.eps_dedup);
}

double dir_deriv(const FuncExpr& f, const Vec& x, const Vec& d, const Tolerances& tol) {
  if (d.size() != f.dim()) throw DimensionMismatch("direction dimension != expression dimension");
  if (d.isZero(0.0)) throw DomainError("direction must be nonzero");
  return subdifferential(f, x, tol).support(d);
}

double clarke_dir_deriv(const FuncExpr& f, const Vec& x, const Vec& d, const Tolerances& tol) {
  // The admitted classes are Clarke regular, so the generalized directional
  // derivative is the same support value over the same generator polytope.
  return dir_deriv(f, x, d, tol);
}

double clarke_dir_estimate(const std::function<double(const Vec&)>& fn, const Vec& x,
                           const Vec& d, double radius, int samples, double tmin,
                           std::uint64_t seed) {
  if (radius <= 0.0 || tmin <= 0.0) throw DomainError("radius and tmin must be positive");
  if (samples < 1) throw DomainError("need at least one sample");
  if (tmin > radius) throw DomainError("tmin must not exceed radius");

  std::mt19937_64 rng(seed);
  auto unit = [&]() { return (rng() >> 11) * 0x1.0p-53; };  // uniform in [0, 1)
  const int n = static_cast<int>(x.size());

  constexpr int kStepsPerBase = 16;
  std::vector<double> steps(kStepsPerBase);
  if (tmin == radius) {
    steps.assign(1, tmin);
  } else {
    double ratio = std::pow(radius / tmin, 1.0 / (kStepsPerBase - 1));
    double t = tmin;
    for (int j = 0; j < kStepsPerBase; ++j, t *= ratio) steps[j] = std::min(t, radius);
  }

  double best = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Vec y = x;
    if (s > 0) {  // sample 0 probes the base point itself
      Vec g(n);
      for (int i = 0; i < n; ++i) {
        // Box-Muller from two uniforms; deterministic given the seed.
        double u1 = std::max(unit(), 1e-300), u2 = unit();
        g[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
      }
      double norm = g.norm();
      if (norm > 0.0) y += (radius * std::pow(unit(), 1.0 / n) / norm) * g;
    }
    double fy = fn(y);
    for (double t : steps) {
      double q = (fn(y + t * d) - fy) / t;
      best = std::max(best, q);
    }
  }
  return best;
}

RegularityReport regularity_check(const FuncExpr& f, const Vec& x,
                                  const std::vector<Vec>& dirs, const Tolerances& tol,
                                  double dir_tol) {
  if (dirs.empty()) throw DomainError("regularity check needs at least one direction");
  check_point(f, x);
  RegularityReport rep;

  // Breakpoint slope ordering for every univariate node in the tree.
  visit(f, [&](const FuncExpr& node) {
    const auto* pw = node.as<PwUniNode>();
    if (!pw) return;
    for (size_t i = 0; i < pw->f.breaks.size(); ++i) {
      double a = pw->f.breaks[i];
      double gap = pw->f.pieces[i].deriv(a) - pw->f.pieces[i + 1].deriv(a);
      if (gap > 1e-9) {
        rep.max_kink_violation = std::max(rep.max_kink_violation, gap);
        rep.notes.push_back("concave kink at breakpoint " + std::to_string(a) +
                            " of variable " + std::to_string(pw->var));
      }
    }
  });

  // One-sided finite differences vs. the generator formula. The two-step
  // Richardson combination cancels the linear error term of smooth pieces.
  const double t1 = 1e-5, t2 = 5e-6;
  double fx = eval(f, x);
  for (const auto& d : dirs) {
    double formula = dir_deriv(f, x, d, tol);
    double q1 = (eval(f, x + t1 * d) - fx) / t1;
    double q2 = (eval(f, x + t2 * d) - fx) / t2;
    double fd = 2.0 * q2 - q1;
    rep.max_dir_mismatch = std::max(rep.max_dir_mismatch, std::abs(formula - fd));
  }

  rep.pass = rep.max_kink_violation <= 1e-9 && rep.max_dir_mismatch <= dir_tol;
  return rep;
}

double expansion_residual(const FuncExpr& f, const Vec& x, const Vec& d, double t,
                          const Tolerances& tol) {
  if (t <= 0.0) throw DomainError("step t must be positive");
  return std::abs(eval(f, x + t * d) - eval(f, x) - t * dir_deriv(f, x, d, tol));
}

}  // namespace nsopt
