#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "ctfid/lp.hpp"
#include "ctfid/scm.hpp"

namespace ctfid {

class BoundsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  bool contains(double v, double tol = 1e-9) const { return v >= lo - tol && v <= hi + tol; }
  bool inside(const Interval& o, double tol = 1e-9) const { return lo >= o.lo - tol && hi <= o.hi + tol; }
  double width() const { return hi - lo; }
};

using Table2 = std::vector<std::vector<double>>;               // [x][y]
using Table3 = std::vector<std::vector<std::vector<double>>>;  // [x natural][x assigned][y]

// Data over the bow graph X -> Y, X <-> Y.
//   obs[x][y] = P(X=x, Y=y)
//   exp[x][y] = P(Y_x = y)
//   ctf[x'][x][y] = P(Y_x = y | X = x')
struct BowData {
  int m = 2;  // |X|
  int k = 2;  // |Y|
  std::optional<Table2> obs;
  std::optional<Table2> exp;
  std::optional<Table3> ctf;

  // Checks shapes and normalization; with `positive`, also that every cell
  // of the supplied tables is strictly positive.
  void validate(bool positive = false) const;
  double px(int x) const;           // needs obs
  double py_given_x(int y, int x) const;  // needs obs
};

// Exact data of an SCM whose variables include X and Y (bow-shaped).
BowData bow_data_from_scm(const DiscreteSCM& m, const std::string& x = "X", const std::string& y = "Y");
// P(Y_x = y | X = x', Y = y') by enumeration.
double nte_truth(const DiscreteSCM& m, int x, int xp, int y, int yp, const std::string& xn = "X",
                 const std::string& yn = "Y");

// Closed-form bounds on P(y_x | x', y'), x != x'.
Interval nte_bounds_l1();
// Two-event Frechet-Hoeffding bounds [alpha_min, alpha_max] on P(y_x | x').
Interval ett_bounds(const BowData& d, int x, int xp, int y);
Interval nte_bounds_l2(const BowData& d, int x, int xp, int y, int yp);
Interval nte_bounds_l25(const BowData& d, int x, int xp, int y, int yp);

// Response-function parametrization: one weight per (natural x, map X -> Y).
struct CanonicalModel {
  int m = 2, k = 2;
  int maps() const;
  int size() const { return m * maps(); }
  int index(int xtype, int rfun) const { return xtype * maps() + rfun; }
  int response(int rfun, int x) const;  // r(x)
};

// Which data enter the polytope. Fields compose; obs implies x_marginal.
struct ConstraintSet {
  bool x_marginal = false;  // P(X)
  bool obs = false;         // P(X, Y)
  int obs_row = -1;         // P(X=obs_row, Y) only
  bool exp = false;         // P(Y_x) for all x
  int exp_arm = -1;         // P(Y_{exp_arm}) only
  bool ctf = false;         // P(Y_x | X) for all pairs

  std::vector<std::string> labels() const;

  static ConstraintSet observational();
  static ConstraintSet interventional();  // obs + exp
  static ConstraintSet counterfactual();  // obs + ctf
  static ConstraintSet all();
  // Exactly the quantities the closed-form interventional bound uses.
  static ConstraintSet nte_l2_inputs(int x, int xp);
};

LinearProgram bow_program(const CanonicalModel& cm, const BowData& d, const ConstraintSet& cs);

struct LinearFractional {
  std::vector<double> num, den;
  double num0 = 0.0, den0 = 0.0;
};
LinearFractional nte_objective(const CanonicalModel& cm, int x, int xp, int y, int yp);

struct PolytopeResult {
  Interval interval;
  std::string method;  // "lp" (fixed denominator) or "lp-bisection"
  std::vector<std::string> constraints;
  int lp_calls = 0;
};
// Throws BoundsError if the data are inconsistent with the polytope.
PolytopeResult polytope_bounds(const BowData& d, const ConstraintSet& cs, const LinearFractional& f);
PolytopeResult nte_polytope_bounds(const BowData& d, const ConstraintSet& cs, int x, int xp, int y, int yp);

// Benefit of treating each unit type (Y_0, Y_1) of a binary bow model.
struct Benefits {
  double always1 = 0.0;  // (1, 1)
  double helped = 0.0;   // (0, 1)
  double hurt = 0.0;     // (1, 0)
  double always0 = 0.0;  // (0, 0)
  double of(int y0, int y1) const;
};

enum class Decision { Treat, Withhold, Inconclusive };
std::string decision_name(Decision d);
Decision decide(const Interval& benefit);

// subgroup < 0 gives the population benefit Delta(1); otherwise the benefit
// conditional on natural X = subgroup.
LinearFractional benefit_objective(const CanonicalModel& cm, const Benefits& b, int subgroup);

struct UnitSelectionReport {
  Interval population;               // from obs + exp
  std::vector<Interval> subgroup;    // from obs + ctf, indexed by natural x
  Decision population_decision = Decision::Inconclusive;
  std::vector<Decision> subgroup_decision;
  // Smallest advantage, over every model consistent with all data, of the
  // subgroup policy over treating everyone and over treating no one.
  double margin_vs_treat_all = 0.0;
  double margin_vs_treat_none = 0.0;
  bool dominates = false;
};
UnitSelectionReport unit_selection(const BowData& d, const Benefits& b);

// Tables as CSV: obs "x,y,p"; exp "x,y_x,p"; ctf "x_natural,x_assigned,y,p".
BowData load_bow_csv(const std::string& obs_path, const std::string& exp_path = "",
                     const std::string& ctf_path = "");

// The inverse of load_bow_csv; a missing table gives an empty string.
struct BowCsv {
  std::string obs, exp, ctf;
};
BowCsv bow_csv(const BowData& d);

struct IntervalRow {
  std::string label;
  std::string tier;  // e.g. "L2" or "L2.5"
  Interval interval;
  std::optional<double> truth;
};
std::string intervals_csv(const std::vector<IntervalRow>& rows);
// Horizontal range bars on a shared axis, one row per entry.
std::string intervals_svg(const std::vector<IntervalRow>& rows, const std::string& title);

nlohmann::json interval_json(const Interval& i);

}  // namespace ctfid
