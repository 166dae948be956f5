#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ctfid {

class LpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// minimize or maximize c.x subject to A x = b, x >= 0.
struct LinearProgram {
  int n = 0;
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<double> c;

  void add_row(std::vector<double> coeffs, double rhs);
};

struct LpResult {
  enum class Status { Optimal, Infeasible, Unbounded };
  Status status = Status::Infeasible;
  double value = 0.0;
  std::vector<double> x;
  int pivots = 0;
};

// Dense two-phase simplex using Bland's rule, so runs are deterministic and
// never cycle. Rows are scaled by nothing; feasibility tolerance is 1e-9.
LpResult solve_lp(const LinearProgram& lp, bool maximize);

// Extremes of (num.x + num0) / (den.x + den0) over the feasible set, found by
// bisection on the level parameter. The denominator must stay positive on the
// feasible set. Throws LpError if the program is infeasible.
struct FractionalRange {
  double lo = 0.0, hi = 0.0;
  int lp_calls = 0;
};
FractionalRange fractional_range(const LinearProgram& lp, const std::vector<double>& num, double num0,
                                 const std::vector<double>& den, double den0, double tol = 1e-10);

}  // namespace ctfid
