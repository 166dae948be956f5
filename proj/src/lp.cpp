#include "ctfid/lp.hpp"

#include <cmath>
#include <limits>

namespace ctfid {

namespace {

constexpr double kPivotEps = 1e-12;
constexpr double kFeasTol = 1e-9;

struct Tableau {
  int rows = 0, cols = 0;  // cols excludes the rhs column
  std::vector<std::vector<double>> t;
  std::vector<int> basis;
  int pivots = 0;

  double& rhs(int r) { return t[r][cols]; }

  void pivot(int r, int c) {
    ++pivots;
    double p = t[r][c];
    for (double& v : t[r]) v /= p;
    for (int i = 0; i < static_cast<int>(t.size()); ++i) {
      if (i == r || t[i][c] == 0.0) continue;
      double f = t[i][c];
      for (int j = 0; j <= cols; ++j) t[i][j] -= f * t[r][j];
    }
    basis[r] = c;
  }

  // Minimizes the objective stored in the last row (reduced costs), using
  // only columns below `allowed`. Returns false if unbounded.
  bool run(int allowed) {
    int obj = rows;
    for (;;) {
      int enter = -1;
      for (int j = 0; j < allowed; ++j)
        if (t[obj][j] < -kPivotEps) {
          enter = j;
          break;
        }
      if (enter < 0) return true;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows; ++i) {
        if (t[i][enter] <= kPivotEps) continue;
        double ratio = t[i][cols] / t[i][enter];
        if (ratio < best - 1e-15 || (leave >= 0 && std::abs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }
};

}  // namespace

void LinearProgram::add_row(std::vector<double> coeffs, double rhs) {
  if (static_cast<int>(coeffs.size()) != n) throw LpError("row width does not match the program");
  a.push_back(std::move(coeffs));
  b.push_back(rhs);
}

LpResult solve_lp(const LinearProgram& lp, bool maximize) {
  const int m = static_cast<int>(lp.a.size());
  const int n = lp.n;
  if (static_cast<int>(lp.c.size()) != n) throw LpError("objective width does not match the program");

  Tableau tb;
  tb.rows = m;
  tb.cols = n + m;
  tb.t.assign(m + 1, std::vector<double>(tb.cols + 1, 0.0));
  tb.basis.resize(m);
  for (int i = 0; i < m; ++i) {
    double sign = lp.b[i] < 0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) tb.t[i][j] = sign * lp.a[i][j];
    tb.t[i][n + i] = 1.0;
    tb.rhs(i) = sign * lp.b[i];
    tb.basis[i] = n + i;
  }
  // Phase one: minimize the sum of artificials.
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= tb.cols; ++j)
      if (j < n || j == tb.cols) tb.t[m][j] -= tb.t[i][j];
  tb.run(tb.cols);

  LpResult res;
  if (-tb.t[m][tb.cols] > kFeasTol) {
    res.status = LpResult::Status::Infeasible;
    res.pivots = tb.pivots;
    return res;
  }
  // Drive artificials out of the basis; rows where that fails are redundant.
  for (int i = 0; i < tb.rows; ++i) {
    if (tb.basis[i] < n) continue;
    int col = -1;
    for (int j = 0; j < n; ++j)
      if (std::abs(tb.t[i][j]) > 1e-9) {
        col = j;
        break;
      }
    if (col >= 0) {
      tb.pivot(i, col);
    } else {
      tb.t.erase(tb.t.begin() + i);
      tb.basis.erase(tb.basis.begin() + i);
      --tb.rows;
      --i;
    }
  }

  // Phase two.
  auto& obj = tb.t[tb.rows];
  std::fill(obj.begin(), obj.end(), 0.0);
  double sign = maximize ? -1.0 : 1.0;
  for (int j = 0; j < n; ++j) obj[j] = sign * lp.c[j];
  for (int i = 0; i < tb.rows; ++i) {
    double f = obj[tb.basis[i]];
    if (f == 0.0) continue;
    for (int j = 0; j <= tb.cols; ++j) obj[j] -= f * tb.t[i][j];
  }
  bool bounded = tb.run(n);
  res.pivots = tb.pivots;
  if (!bounded) {
    res.status = LpResult::Status::Unbounded;
    return res;
  }
  res.status = LpResult::Status::Optimal;
  res.x.assign(n, 0.0);
  for (int i = 0; i < tb.rows; ++i)
    if (tb.basis[i] < n) res.x[tb.basis[i]] = tb.rhs(i);
  res.value = 0.0;
  for (int j = 0; j < n; ++j) res.value += lp.c[j] * res.x[j];
  return res;
}

FractionalRange fractional_range(const LinearProgram& lp, const std::vector<double>& num, double num0,
                                 const std::vector<double>& den, double den0, double tol) {
  FractionalRange out;
  LinearProgram probe = lp;
  auto extreme = [&](const std::vector<double>& c, bool maximize) {
    probe.c = c;
    ++out.lp_calls;
    LpResult r = solve_lp(probe, maximize);
    if (r.status == LpResult::Status::Infeasible) throw LpError("constraints are infeasible");
    if (r.status == LpResult::Status::Unbounded) throw LpError("objective is unbounded");
    return r.value;
  };
  double dmin = extreme(den, false) + den0;
  if (dmin <= 0.0) throw LpError("denominator is not positive on the feasible set");

  // Initial bracket from the extremes of numerator and denominator.
  double nmin = extreme(num, false) + num0, nmax = extreme(num, true) + num0;
  double dmax = extreme(den, true) + den0;
  double lo0 = std::min({nmin / dmin, nmin / dmax}), hi0 = std::max({nmax / dmin, nmax / dmax});

  // g(t) = max (num - t den); the ratio can reach t iff g(t) >= 0.
  auto level = [&](double t, bool maximize) {
    std::vector<double> c(num.size());
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = num[j] - t * den[j];
    return extreme(c, maximize) + num0 - t * den0;
  };
  double lo = lo0, hi = hi0;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (level(mid, true) >= 0.0) lo = mid;
    else hi = mid;
  }
  out.hi = lo;
  lo = lo0;
  hi = hi0;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (level(mid, false) <= 0.0) hi = mid;
    else lo = mid;
  }
  out.lo = hi;
  return out;
}

}  // namespace ctfid
