#include "ctfid/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ctfid/oracle.hpp"

namespace ctfid {

namespace {

double table_sum(const Table2& t) {
  double s = 0.0;
  for (const auto& row : t)
    for (double v : row) s += v;
  return s;
}

void check_shape(const Table2& t, int rows, int cols, const char* what) {
  if (static_cast<int>(t.size()) != rows) throw BoundsError(std::string(what) + " has the wrong number of rows");
  for (const auto& r : t)
    if (static_cast<int>(r.size()) != cols) throw BoundsError(std::string(what) + " has the wrong number of columns");
}

Event plain_event(VarId v, int value) {
  Event e;
  e.resp.var = v;
  e.value = Val::of(value);
  return e;
}

Event response_event(VarId v, VarId x, int xv, int value) {
  Event e = plain_event(v, value);
  e.resp.set(x, Val::of(xv));
  return e;
}


}  // namespace

void BowData::validate(bool positive) const {
  if (m < 2 || k < 2) throw BoundsError("bow data needs |X| >= 2 and |Y| >= 2");
  auto cell = [&](double v, const char* what) {
    if (v < -1e-12 || v > 1 + 1e-12) throw BoundsError(std::string(what) + " holds a value outside [0,1]");
    if (positive && v <= 0.0) throw BoundsError(std::string(what) + " is not strictly positive");
  };
  if (obs) {
    check_shape(*obs, m, k, "observational table");
    for (const auto& r : *obs)
      for (double v : r) cell(v, "observational table");
    if (std::abs(table_sum(*obs) - 1.0) > 1e-9) throw BoundsError("observational table does not sum to 1");
  }
  if (exp) {
    check_shape(*exp, m, k, "interventional table");
    for (const auto& r : *exp) {
      double s = 0.0;
      for (double v : r) {
        cell(v, "interventional table");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-9) throw BoundsError("interventional row does not sum to 1");
    }
  }
  if (ctf) {
    if (static_cast<int>(ctf->size()) != m) throw BoundsError("counterfactual table has the wrong shape");
    for (const auto& t : *ctf) {
      check_shape(t, m, k, "counterfactual table");
      for (const auto& r : t) {
        double s = 0.0;
        for (double v : r) {
          cell(v, "counterfactual table");
          s += v;
        }
        if (std::abs(s - 1.0) > 1e-9) throw BoundsError("counterfactual row does not sum to 1");
      }
    }
  }
}

double BowData::px(int x) const {
  if (!obs) throw BoundsError("observational data required");
  double s = 0.0;
  for (double v : (*obs)[x]) s += v;
  return s;
}

double BowData::py_given_x(int y, int x) const {
  double p = px(x);
  if (p <= 0.0) throw BoundsError("P(X=" + std::to_string(x) + ") is zero");
  return (*obs)[x][y] / p;
}

BowData bow_data_from_scm(const DiscreteSCM& m, const std::string& xn, const std::string& yn) {
  VarId x = m.id(xn), y = m.id(yn);
  BowData d;
  d.m = m.cards[x];
  d.k = m.cards[y];
  Table2 obs(d.m, std::vector<double>(d.k)), exp = obs;
  Table3 ctf(d.m, Table2(d.m, std::vector<double>(d.k)));
  for (int a = 0; a < d.m; ++a)
    for (int b = 0; b < d.k; ++b) {
      Conjunction c;
      c.add(plain_event(x, a));
      c.add(plain_event(y, b));
      obs[a][b] = l3_valuation(m, c);
      Conjunction e;
      e.add(response_event(y, x, a, b));
      exp[a][b] = l3_valuation(m, e);
    }
  for (int nat = 0; nat < d.m; ++nat) {
    double pn = 0.0;
    for (double v : obs[nat]) pn += v;
    for (int a = 0; a < d.m; ++a)
      for (int b = 0; b < d.k; ++b) {
        Conjunction c;
        c.add(plain_event(x, nat));
        c.add(response_event(y, x, a, b));
        ctf[nat][a][b] = pn > 0 ? l3_valuation(m, c) / pn : 0.0;
      }
  }
  d.obs = obs;
  d.exp = exp;
  d.ctf = ctf;
  return d;
}

double nte_truth(const DiscreteSCM& m, int x, int xp, int y, int yp, const std::string& xn,
                 const std::string& yn) {
  VarId xv = m.id(xn), yv = m.id(yn);
  Query q;
  q.joint.add(response_event(yv, xv, x, y));
  Conjunction g;
  g.add(plain_event(xv, xp));
  g.add(plain_event(yv, yp));
  q.given = g;
  return l3_query(m, q);
}

Interval nte_bounds_l1() { return {0.0, 1.0}; }

Interval ett_bounds(const BowData& d, int x, int xp, int y) {
  if (x == xp) throw BoundsError("the treatment arm must differ from the natural value");
  if (!d.exp) throw BoundsError("interventional data required");
  double pxp = d.px(xp);
  if (pxp <= 0.0) throw BoundsError("P(X=x') is zero");
  double pyx = (*d.exp)[x][y];
  return {std::max(0.0, (pyx - (1.0 - pxp)) / pxp), std::min(1.0, pyx / pxp)};
}

Interval nte_bounds_l2(const BowData& d, int x, int xp, int y, int yp) {
  Interval a = ett_bounds(d, x, xp, y);
  double c = d.py_given_x(yp, xp);
  if (c <= 0.0) throw BoundsError("P(y'|x') is zero");
  return {std::max(0.0, (a.lo - (1.0 - c)) / c), std::min(1.0, a.hi / c)};
}

Interval nte_bounds_l25(const BowData& d, int x, int xp, int y, int yp) {
  if (x == xp) throw BoundsError("the treatment arm must differ from the natural value");
  if (!d.ctf) throw BoundsError("counterfactual data required");
  double c = d.py_given_x(yp, xp);
  if (c <= 0.0) throw BoundsError("P(y'|x') is zero");
  double e = (*d.ctf)[xp][x][y];
  return {std::max(0.0, (e - (1.0 - c)) / c), std::min(1.0, e / c)};
}

int CanonicalModel::maps() const {
  int n = 1;
  for (int i = 0; i < m; ++i) n *= k;
  return n;
}

int CanonicalModel::response(int rfun, int x) const {
  for (int i = 0; i < x; ++i) rfun /= k;
  return rfun % k;
}

std::vector<std::string> ConstraintSet::labels() const {
  std::vector<std::string> out;
  if (obs) out.push_back("P(X,Y)");
  else {
    if (x_marginal) out.push_back("P(X)");
    if (obs_row >= 0) out.push_back("P(X=" + std::to_string(obs_row) + ",Y)");
  }
  if (exp) out.push_back("P(Y_x)");
  else if (exp_arm >= 0) out.push_back("P(Y_" + std::to_string(exp_arm) + ")");
  if (ctf) out.push_back("P(Y_x|X)");
  return out;
}

ConstraintSet ConstraintSet::observational() {
  ConstraintSet c;
  c.obs = true;
  return c;
}

ConstraintSet ConstraintSet::interventional() {
  ConstraintSet c = observational();
  c.exp = true;
  return c;
}

ConstraintSet ConstraintSet::counterfactual() {
  ConstraintSet c = observational();
  c.ctf = true;
  return c;
}

ConstraintSet ConstraintSet::all() {
  ConstraintSet c = interventional();
  c.ctf = true;
  return c;
}

ConstraintSet ConstraintSet::nte_l2_inputs(int x, int xp) {
  ConstraintSet c;
  c.x_marginal = true;
  c.obs_row = xp;
  c.exp_arm = x;
  return c;
}

LinearProgram bow_program(const CanonicalModel& cm, const BowData& d, const ConstraintSet& cs) {
  LinearProgram lp;
  lp.n = cm.size();
  lp.c.assign(lp.n, 0.0);
  lp.add_row(std::vector<double>(lp.n, 1.0), 1.0);
  bool need_obs = cs.obs || cs.x_marginal || cs.obs_row >= 0 || cs.ctf;
  if (need_obs && !d.obs) throw BoundsError("constraint set needs observational data");
  if ((cs.exp || cs.exp_arm >= 0) && !d.exp) throw BoundsError("constraint set needs interventional data");
  if (cs.ctf && !d.ctf) throw BoundsError("constraint set needs counterfactual data");

  const int R = cm.maps();
  if (cs.x_marginal && !cs.obs) {
    for (int x = 0; x < cm.m; ++x) {
      std::vector<double> row(lp.n, 0.0);
      for (int r = 0; r < R; ++r) row[cm.index(x, r)] = 1.0;
      lp.add_row(row, d.px(x));
    }
  }
  for (int x = 0; x < cm.m; ++x) {
    if (!cs.obs && cs.obs_row != x) continue;
    for (int y = 0; y < cm.k; ++y) {
      std::vector<double> row(lp.n, 0.0);
      for (int r = 0; r < R; ++r)
        if (cm.response(r, x) == y) row[cm.index(x, r)] = 1.0;
      lp.add_row(row, (*d.obs)[x][y]);
    }
  }
  for (int x = 0; x < cm.m; ++x) {
    if (!cs.exp && cs.exp_arm != x) continue;
    for (int y = 0; y < cm.k; ++y) {
      std::vector<double> row(lp.n, 0.0);
      for (int t = 0; t < cm.m; ++t)
        for (int r = 0; r < R; ++r)
          if (cm.response(r, x) == y) row[cm.index(t, r)] = 1.0;
      lp.add_row(row, (*d.exp)[x][y]);
    }
  }
  if (cs.ctf) {
    for (int nat = 0; nat < cm.m; ++nat)
      for (int x = 0; x < cm.m; ++x)
        for (int y = 0; y < cm.k; ++y) {
          std::vector<double> row(lp.n, 0.0);
          for (int r = 0; r < R; ++r)
            if (cm.response(r, x) == y) row[cm.index(nat, r)] = 1.0;
          lp.add_row(row, (*d.ctf)[nat][x][y] * d.px(nat));
        }
  }
  return lp;
}

LinearFractional nte_objective(const CanonicalModel& cm, int x, int xp, int y, int yp) {
  if (x == xp) throw BoundsError("the treatment arm must differ from the natural value");
  LinearFractional f;
  f.num.assign(cm.size(), 0.0);
  f.den.assign(cm.size(), 0.0);
  for (int r = 0; r < cm.maps(); ++r) {
    if (cm.response(r, xp) != yp) continue;
    f.den[cm.index(xp, r)] = 1.0;
    if (cm.response(r, x) == y) f.num[cm.index(xp, r)] = 1.0;
  }
  return f;
}

PolytopeResult polytope_bounds(const BowData& d, const ConstraintSet& cs, const LinearFractional& f) {
  d.validate();
  CanonicalModel cm{d.m, d.k};
  LinearProgram lp = bow_program(cm, d, cs);
  if (static_cast<int>(f.num.size()) != lp.n || static_cast<int>(f.den.size()) != lp.n)
    throw BoundsError("objective does not match the canonical model");
  PolytopeResult out;
  out.constraints = cs.labels();

  auto solve = [&](const std::vector<double>& c, bool maximize) {
    lp.c = c;
    ++out.lp_calls;
    LpResult r = solve_lp(lp, maximize);
    if (r.status == LpResult::Status::Infeasible) throw BoundsError("data are inconsistent with the bow graph");
    return r.value;
  };
  double dmin = solve(f.den, false) + f.den0, dmax = solve(f.den, true) + f.den0;
  if (dmin <= 1e-12) throw BoundsError("conditioning event can have zero probability under these constraints");
  if (dmax - dmin <= 1e-12) {
    out.method = "lp";
    out.interval = {(solve(f.num, false) + f.num0) / dmin, (solve(f.num, true) + f.num0) / dmin};
    return out;
  }
  out.method = "lp-bisection";
  lp.c.assign(lp.n, 0.0);
  try {
    FractionalRange fr = fractional_range(lp, f.num, f.num0, f.den, f.den0);
    out.lp_calls += fr.lp_calls;
    out.interval = {fr.lo, fr.hi};
  } catch (const LpError& e) {
    throw BoundsError(e.what());
  }
  return out;
}

PolytopeResult nte_polytope_bounds(const BowData& d, const ConstraintSet& cs, int x, int xp, int y, int yp) {
  return polytope_bounds(d, cs, nte_objective(CanonicalModel{d.m, d.k}, x, xp, y, yp));
}

double Benefits::of(int y0, int y1) const {
  if (y0 == 1 && y1 == 1) return always1;
  if (y0 == 0 && y1 == 1) return helped;
  if (y0 == 1 && y1 == 0) return hurt;
  return always0;
}

std::string decision_name(Decision d) {
  switch (d) {
    case Decision::Treat:
      return "treat";
    case Decision::Withhold:
      return "withhold";
    case Decision::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

Decision decide(const Interval& benefit) {
  if (benefit.lo > 0.0) return Decision::Treat;
  if (benefit.hi < 0.0) return Decision::Withhold;
  return Decision::Inconclusive;
}

LinearFractional benefit_objective(const CanonicalModel& cm, const Benefits& b, int subgroup) {
  if (cm.m != 2 || cm.k != 2) throw BoundsError("unit selection needs binary X and Y");
  LinearFractional f;
  f.num.assign(cm.size(), 0.0);
  f.den.assign(cm.size(), 0.0);
  for (int t = 0; t < cm.m; ++t) {
    if (subgroup >= 0 && t != subgroup) continue;
    for (int r = 0; r < cm.maps(); ++r) {
      f.num[cm.index(t, r)] = b.of(cm.response(r, 0), cm.response(r, 1));
      if (subgroup >= 0) f.den[cm.index(t, r)] = 1.0;
    }
  }
  if (subgroup < 0) f.den0 = 1.0;
  return f;
}

UnitSelectionReport unit_selection(const BowData& d, const Benefits& b) {
  if (!d.obs || !d.exp || !d.ctf) throw BoundsError("unit selection needs observational, interventional and counterfactual data");
  CanonicalModel cm{d.m, d.k};
  UnitSelectionReport rep;
  rep.population = polytope_bounds(d, ConstraintSet::interventional(), benefit_objective(cm, b, -1)).interval;
  rep.population_decision = decide(rep.population);
  for (int x = 0; x < cm.m; ++x) {
    rep.subgroup.push_back(polytope_bounds(d, ConstraintSet::counterfactual(), benefit_objective(cm, b, x)).interval);
    rep.subgroup_decision.push_back(decide(rep.subgroup.back()));
  }

  // Unnormalized policy values: sum over treated natural groups of
  // P(x') * Delta(1 | x').
  LinearFractional sub = benefit_objective(cm, b, -1);
  for (int x = 0; x < cm.m; ++x)
    if (rep.subgroup_decision[x] != Decision::Treat)
      for (int r = 0; r < cm.maps(); ++r) sub.num[cm.index(x, r)] = 0.0;
  LinearFractional vs_all = sub;
  LinearFractional everyone = benefit_objective(cm, b, -1);
  for (int j = 0; j < cm.size(); ++j) vs_all.num[j] -= everyone.num[j];
  ConstraintSet full = ConstraintSet::all();
  rep.margin_vs_treat_all = polytope_bounds(d, full, vs_all).interval.lo;
  rep.margin_vs_treat_none = polytope_bounds(d, full, sub).interval.lo;
  rep.dominates = rep.margin_vs_treat_all >= -1e-9 && rep.margin_vs_treat_none >= -1e-9;
  return rep;
}

namespace {

std::vector<std::vector<double>> read_csv_numbers(const std::string& path, std::size_t width) {
  std::ifstream in(path);
  if (!in) throw BoundsError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && lineno == 1) continue;  // header
      throw BoundsError(path + ":" + std::to_string(lineno) + ": not a numeric row");
    }
    if (row.size() != width)
      throw BoundsError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(width) + " columns");
    rows.push_back(row);
  }
  return rows;
}

int as_index(double v, const std::string& path) {
  if (v < 0 || v != std::floor(v)) throw BoundsError(path + ": value columns must be non-negative integers");
  return static_cast<int>(v);
}

}  // namespace

BowData load_bow_csv(const std::string& obs_path, const std::string& exp_path, const std::string& ctf_path) {
  auto obs = read_csv_numbers(obs_path, 3);
  std::vector<std::vector<double>> exp, ctf;
  if (!exp_path.empty()) exp = read_csv_numbers(exp_path, 3);
  if (!ctf_path.empty()) ctf = read_csv_numbers(ctf_path, 4);
  BowData d;
  d.m = d.k = 2;
  for (const auto& r : obs) {
    d.m = std::max(d.m, as_index(r[0], obs_path) + 1);
    d.k = std::max(d.k, as_index(r[1], obs_path) + 1);
  }
  for (const auto& r : exp) {
    d.m = std::max(d.m, as_index(r[0], exp_path) + 1);
    d.k = std::max(d.k, as_index(r[1], exp_path) + 1);
  }
  for (const auto& r : ctf) {
    d.m = std::max({d.m, as_index(r[0], ctf_path) + 1, as_index(r[1], ctf_path) + 1});
    d.k = std::max(d.k, as_index(r[2], ctf_path) + 1);
  }
  Table2 t(d.m, std::vector<double>(d.k, 0.0));
  d.obs = t;
  for (const auto& r : obs) (*d.obs)[static_cast<int>(r[0])][static_cast<int>(r[1])] = r[2];
  if (!exp.empty()) {
    d.exp = t;
    for (const auto& r : exp) (*d.exp)[static_cast<int>(r[0])][static_cast<int>(r[1])] = r[2];
  }
  if (!ctf.empty()) {
    d.ctf = Table3(d.m, t);
    for (const auto& r : ctf)
      (*d.ctf)[static_cast<int>(r[0])][static_cast<int>(r[1])][static_cast<int>(r[2])] = r[3];
  }
  d.validate();
  return d;
}

BowCsv bow_csv(const BowData& d) {
  BowCsv out;
  auto fmt = [](std::ostringstream& os) { os.precision(12); };
  if (d.obs) {
    std::ostringstream os;
    fmt(os);
    os << "x,y,p\n";
    for (int x = 0; x < d.m; ++x)
      for (int y = 0; y < d.k; ++y) os << x << ',' << y << ',' << (*d.obs)[x][y] << '\n';
    out.obs = os.str();
  }
  if (d.exp) {
    std::ostringstream os;
    fmt(os);
    os << "x,y_x,p\n";
    for (int x = 0; x < d.m; ++x)
      for (int y = 0; y < d.k; ++y) os << x << ',' << y << ',' << (*d.exp)[x][y] << '\n';
    out.exp = os.str();
  }
  if (d.ctf) {
    std::ostringstream os;
    fmt(os);
    os << "x_natural,x_assigned,y,p\n";
    for (int xp = 0; xp < d.m; ++xp)
      for (int x = 0; x < d.m; ++x)
        for (int y = 0; y < d.k; ++y) os << xp << ',' << x << ',' << y << ',' << (*d.ctf)[xp][x][y] << '\n';
    out.ctf = os.str();
  }
  return out;
}

std::string intervals_csv(const std::vector<IntervalRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "label,tier,lo,hi,truth\n";
  for (const auto& r : rows) {
    if (r.label.find_first_of(",\"") != std::string::npos) {
      os << '"';
      for (char c : r.label) os << (c == '"' ? "\"\"" : std::string(1, c));
      os << '"';
    } else {
      os << r.label;
    }
    os << ',' << r.tier << ',' << r.interval.lo << ',' << r.interval.hi << ',';
    if (r.truth) os << *r.truth;
    os << '\n';
  }
  return os.str();
}

std::string intervals_svg(const std::vector<IntervalRow>& rows, const std::string& title) {
  double lo = 0.0, hi = 1.0;
  for (const auto& r : rows) {
    lo = std::min(lo, r.interval.lo);
    hi = std::max(hi, r.interval.hi);
    if (r.truth) {
      lo = std::min(lo, *r.truth);
      hi = std::max(hi, *r.truth);
    }
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const int left = 200, width = 420, row_h = 28, top = 40;
  const int height = top + row_h * static_cast<int>(rows.size()) + 40;
  auto px = [&](double v) { return left + (v - lo) / (hi - lo) * width; };

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + width + 30 << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<text x=\"10\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
  int axis_y = top + row_h * static_cast<int>(rows.size()) + 5;
  os << "<line x1=\"" << left << "\" y1=\"" << axis_y << "\" x2=\"" << left + width << "\" y2=\"" << axis_y
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double v = lo + (hi - lo) * i / 4.0;
    os << "<text x=\"" << px(v) << "\" y=\"" << axis_y + 16 << "\" text-anchor=\"middle\">" << v << "</text>\n";
  }
  if (lo < 0.0 && hi > 0.0)
    os << "<line x1=\"" << px(0) << "\" y1=\"" << top - 5 << "\" x2=\"" << px(0) << "\" y2=\"" << axis_y
       << "\" stroke=\"#888\" stroke-dasharray=\"3,3\"/>\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    int y = top + row_h * static_cast<int>(i);
    std::string color = r.tier == "L2.5" ? "#3b6fb6" : r.tier == "L2" ? "#f28e2b" : "#999999";
    os << "<text x=\"10\" y=\"" << y + 16 << "\">" << r.label << " (" << r.tier << ")</text>\n";
    double x0 = px(r.interval.lo), x1 = px(r.interval.hi);
    os << "<rect x=\"" << x0 << "\" y=\"" << y + 4 << "\" width=\"" << std::max(1.0, x1 - x0)
       << "\" height=\"16\" fill=\"" << color << "\"/>\n";
    if (r.truth)
      os << "<line x1=\"" << px(*r.truth) << "\" y1=\"" << y + 2 << "\" x2=\"" << px(*r.truth) << "\" y2=\"" << y + 22
         << "\" stroke=\"#c0392b\" stroke-width=\"2\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

nlohmann::json interval_json(const Interval& i) { return nlohmann::json::array({i.lo, i.hi}); }

}  // namespace ctfid
