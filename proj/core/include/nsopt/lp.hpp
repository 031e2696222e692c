#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "nsopt/expr.hpp"

namespace nsopt {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

/// min c'x  s.t.  A_eq x = b_eq,  lower <= x <= upper  (infinities allowed).
struct LpInstance {
  Vec c;
  Mat A_eq;
  Vec b_eq;
  Vec lower;
  Vec upper;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(A_eq.rows()); }
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vec x;  // meaningful only when status == Optimal
  double value = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
};

/// Dense two-phase simplex. Dantzig pricing with a switch to Bland's rule
/// after 500 stalled pivots; feasibility and optimality tolerances 1e-9,
/// pivot cap 100000 (reported as IterationLimit).
LpResult solve_lp(const LpInstance& inst);

/// Incremental assembly of LP instances; <= rows receive slack columns at
/// build time so callers only think in terms of variables and rows.
class LpBuilder {
 public:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  int add_var(double lo, double hi, double cost = 0.0);
  void set_cost(int var, double cost);
  void add_eq(std::vector<std::pair<int, double>> terms, double rhs);
  void add_le(std::vector<std::pair<int, double>> terms, double rhs);

  int num_vars() const { return static_cast<int>(cost_.size()); }
  LpInstance build() const;

 private:
  struct Row {
    std::vector<std::pair<int, double>> terms;
    double rhs;
    bool is_le;
  };
  std::vector<double> lo_, hi_, cost_;
  std::vector<Row> rows_;
};

}  // namespace nsopt
