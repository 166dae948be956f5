#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "ctfid/bounds.hpp"
#include "ctfid/layers.hpp"
#include "ctfid/oracle.hpp"
#include "ctfid/witness.hpp"
#include "support.hpp"

using namespace ctfid;
using ctfid::testing::fixture;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  std::string s = ss.str();
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.pop_back();
  return s;
}

struct Case {
  CausalDiagram g;
  Query q;
  std::vector<RegimeSpec> regimes;
};

Case load_case(const std::string& dir) {
  Case c;
  c.g = load_diagram(fixture(dir + "/graph.cg"));
  c.q = parse_query(slurp(fixture(dir + "/query.txt")), c.g);
  c.regimes = load_regimes(fixture(dir + "/regimes.txt"), c.g);
  return c;
}

double oracle_gap(const Case& c, const IdResult& r, int models, std::uint64_t seed) {
  double worst = 0.0;
  for (int i = 0; i < models; ++i) {
    auto m = random_scm(c.g, seed + i);
    std::vector<RegimeTable> t;
    for (const auto& a : c.regimes) t.push_back(regime_distribution(m, a));
    worst = std::max(worst, std::abs(evaluate_estimand(r.estimand, t) - l3_query(m, c.q)));
  }
  return worst;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

Outcome frontdoor() {
  auto c = load_case("fig10-frontdoor");
  auto t0 = Clock::now();
  auto r = ctfidu_plus(c.g, c.q, c.regimes);
  double secs = seconds_since(t0);
  if (!r.identified) return {false, "not identified"};
  bool shape = alpha_equal(r.estimand.root, testing::frontdoor_reference(c.g, 1, 1));
  double gap = oracle_gap(c, r, 20, 1);
  return {shape && gap <= 1e-6 && secs < 1.0,
          "structural match " + std::string(shape ? "yes" : "no") + ", max gap " + fmt(gap) + " over 20 SCMs, " +
              fmt(secs) + " s"};
}

Outcome nde() {
  auto c = load_case("fig1-nde");
  auto r = ctfidu_plus(c.g, c.q, c.regimes);
  if (!r.identified) return {false, "not identified"};
  double gap = oracle_gap(c, r, 20, 100);
  return {gap <= 1e-6, render_text(r.estimand) + ", max gap " + fmt(gap) + " over 20 SCMs"};
}

Outcome ctf_data() {
  auto c = load_case("fig11-ctfdata");
  auto r = ctfidu_plus(c.g, c.q, c.regimes);
  if (!r.identified) return {false, "not identified"};
  const std::vector<std::string> leaves{"P(D=d0)", "P(A[D=d0]=0, B[X=0, A=0]=1)", "P(W[D=d0]=1, Y[W=0, B=1]=0)",
                                        "P(C[X=1, B=0]=0)"};
  int found = 0;
  for (const auto& leaf : leaves)
    found += std::any_of(r.estimand.log.begin(), r.estimand.log.end(),
                         [&](const std::string& line) { return line.find(leaf) != std::string::npos; });
  bool classic_fails = !ctfidu_plus(c.g, c.q, {RegimeSpec{}}).identified;
  double gap = oracle_gap(c, r, 10, 200);
  return {found == 4 && gap <= 1e-6 && classic_fails,
          std::to_string(found) + "/4 leaf blocks logged, observational-only FAIL " +
              (classic_fails ? "yes" : "no") + ", max gap " + fmt(gap) + " over 10 SCMs"};
}

Outcome hedge() {
  auto c = load_case("fig3-hedge");
  auto r = ctfidu_plus(c.g, c.q, c.regimes);
  if (r.identified) return {false, "unexpectedly identified"};
  if (!r.fail.hedge) return {false, "no certificate: " + r.fail.reason};
  bool valid = detect_ctf_hedge(r.fail.hedge->T, r.fail.hedge->C, r.fail.hedge->subgraph);
  auto w = hedge_witness(c.g, *r.fail.hedge);
  return {valid && w.input_gap <= 1e-12 && w.target_gap >= 0.05,
          std::string("certificate ") + (valid ? "valid" : "invalid") + ", input gap " + fmt(w.input_gap) +
              ", target gap " + fmt(w.target_gap)};
}

// Every regime built from one or two L2.5 actions, plus observation.
std::vector<RegimeSpec> small_regimes(const CausalDiagram& g) {
  std::vector<std::string> actions;
  for (VarId v = 0; v < g.size(); ++v) {
    actions.push_back("rand(" + g.name(v) + ")");
    auto ch = g.children_of(v);
    std::vector<VarId> kids(ch.begin(), ch.end());
    for (std::size_t mask = 1; mask < (std::size_t{1} << kids.size()); ++mask) {
      std::string set;
      for (std::size_t i = 0; i < kids.size(); ++i)
        if (mask >> i & 1) set += (set.empty() ? "" : ", ") + g.name(kids[i]);
      actions.push_back("ctf-rand(" + g.name(v) + " -> {" + set + "})");
    }
  }
  std::vector<RegimeSpec> out{RegimeSpec{}};
  auto try_add = [&](const std::string& text) {
    try {
      out.push_back(parse_regime(text, g));
    } catch (const std::exception&) {
      // conflicting pair of actions
    }
  };
  for (std::size_t i = 0; i < actions.size(); ++i) {
    try_add(actions[i]);
    for (std::size_t j = i + 1; j < actions.size(); ++j) try_add(actions[i] + "; " + actions[j]);
  }
  return out;
}

Outcome layer_limit() {
  struct Item {
    std::string graph, query;
  };
  const std::vector<Item> items{
      {"fig4-limit/graph.cg", "P(Y[X=1]=1 | Z[X=0]=1, X=0)"},
      {"graphs/bow.cg", "P(Y[X=1]=1 | X=0, Y=0)"},
      {"graphs/bow.cg", "P(Y[X=1]=1, Y[X=0]=0)"},
      {"fig7-realizability/g2.cg", "P(Y[X=1]=1, Z[X=0]=1)"},
      {"fig1-nde/graph.cg", "P(Y[X=1]=1, Z[X=0]=1)"},
      {"fig10-frontdoor/graph.cg", "P(Y[X=1]=1, Y[X=0]=0)"},
  };
  int good = 0;
  std::size_t regimes_tried = 0;
  std::string bad;
  for (const auto& it : items) {
    auto g = load_diagram(fixture(it.graph));
    auto q = parse_query(it.query, g);
    auto regs = small_regimes(g);
    regimes_tried += regs.size();
    Conjunction all = q.joint;
    if (q.given)
      for (const auto& e : q.given->events) all.add(e);
    bool layer3 = classify_layer(g, q) == Layer::L3;
    bool fails = !ctfidu_plus(g, q, regs).identified;
    bool unrealizable = !realizable_check(g, all);
    if (layer3 && fails && unrealizable) ++good;
    else bad += " " + it.query;
  }
  return {good == static_cast<int>(items.size()) && good >= 5,
          std::to_string(good) + "/" + std::to_string(items.size()) +
              " queries FAIL against all one- and two-action regimes (" + std::to_string(regimes_tried) +
              " regimes) and are unrealizable" + (bad.empty() ? "" : "; offending:" + bad)};
}

Outcome fuzz() {
  std::mt19937_64 rng(2024);
  int identified = 0, violations = 0;
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    auto g = testing::random_diagram(rng, 2 + i % 5, 0.5, 0.3, 4);
    auto q = testing::random_query(rng, g);
    auto regs = testing::random_regimes(rng, g);
    auto c = testing::check_soundness(g, q, regs, 2, 10000 + 7 * i);
    identified += c.identified;
    worst = std::max(worst, c.worst);
    if (c.worst > 1e-6) ++violations;
  }
  return {violations == 0, "500 triples, " + std::to_string(identified) + " identified, " +
                               std::to_string(violations) + " violations, max gap " + fmt(worst)};
}

Outcome bounds_nesting() {
  auto bow = load_diagram(fixture("graphs/bow.cg"));
  int failures = 0;
  double worst_lp = 0.0;
  std::vector<std::pair<ConstraintSet, ConstraintSet>> pairs{
      {ConstraintSet::observational(), ConstraintSet::interventional()},
      {ConstraintSet::nte_l2_inputs(1, 0), ConstraintSet::interventional()},
      {ConstraintSet::interventional(), ConstraintSet::all()},
      {ConstraintSet::observational(), ConstraintSet::counterfactual()},
      {ConstraintSet::counterfactual(), ConstraintSet::all()},
  };
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    auto m = smooth_scm(random_scm(bow, seed), 0.15);
    auto d = bow_data_from_scm(m);
    for (int y = 0; y < 2; ++y) {
      for (int yp = 0; yp < 2; ++yp) {
        double truth = nte_truth(m, 1, 0, y, yp);
        auto l2 = nte_bounds_l2(d, 1, 0, y, yp);
        auto l25 = nte_bounds_l25(d, 1, 0, y, yp);
        if (!l25.contains(truth) || !l25.inside(l2) || !l2.inside(nte_bounds_l1())) ++failures;
        auto lp2 = nte_polytope_bounds(d, ConstraintSet::nte_l2_inputs(1, 0), 1, 0, y, yp).interval;
        auto lp25 = nte_polytope_bounds(d, ConstraintSet::counterfactual(), 1, 0, y, yp).interval;
        worst_lp = std::max({worst_lp, std::abs(lp2.lo - l2.lo), std::abs(lp2.hi - l2.hi),
                             std::abs(lp25.lo - l25.lo), std::abs(lp25.hi - l25.hi)});
        for (const auto& [loose, tight] : pairs) {
          auto a = nte_polytope_bounds(d, loose, 1, 0, y, yp).interval;
          auto b = nte_polytope_bounds(d, tight, 1, 0, y, yp).interval;
          if (!b.inside(a, 1e-7)) ++failures;
        }
      }
    }
  }
  return {failures == 0 && worst_lp <= 1e-6, "25 SCMs x 4 queries, " + std::to_string(failures) +
                                                 " nesting/monotonicity failures, max |LP - analytic| " +
                                                 fmt(worst_lp)};
}

Outcome unit_selection_example() {
  const std::string dir = fixture("ex3-unit-selection/");
  auto d = load_bow_csv(dir + "obs.csv", dir + "exp.csv", dir + "ctf.csv");
  auto r = unit_selection(d, Benefits{12, 14, -10, 9});
  const Interval reference[3] = {{-1.3, 1.6}, {5.7, 11.6}, {-2.5, -0.1}};
  const Interval got[3] = {r.population, r.subgroup.at(0), r.subgroup.at(1)};
  bool close = true;
  std::string text;
  for (int i = 0; i < 3; ++i) {
    close &= std::abs(got[i].lo - reference[i].lo) <= 0.3 && std::abs(got[i].hi - reference[i].hi) <= 0.3;
    text += "[" + fmt(got[i].lo) + ", " + fmt(got[i].hi) + "] ";
  }
  return {close && r.dominates, text + "(exact LP endpoints vs reference MCMC intervals, tolerance 0.3), dominates " +
                                    (r.dominates ? "yes" : "no")};
}

Outcome regex_golden() {
  auto g = load_diagram(fixture("graphs/regex_example.cg"));
  RegimeTemplate t = regime_regex(g, parse_regime("ctf-rand(X -> Y); ctf-rand(X -> W)", g));
  IndexPool pool = t.pool();
  std::string got = render(t.events, g, &pool);
  const std::string want = "P(X=x'', T=t, W[X=x']=w, Z[W=w]=z, Y[X=x, T=t, W=w]=y)";
  return {got == want, got};
}

Outcome scaling() {
  std::vector<double> ns, ts;
  for (int n = 4; n <= 12; ++n) {
    auto g = testing::chain(n);
    const std::string last = "V" + std::to_string(n - 1), mid = "V" + std::to_string(n / 2);
    auto q = parse_query("P(" + last + "[V0=1]=1, " + mid + "[V0=1]=0 | V0=0)", g);
    std::vector<double> runs;
    for (int rep = 0; rep < 5; ++rep) {
      auto t0 = Clock::now();
      auto r = ctfidu_plus(g, q, {RegimeSpec{}});
      runs.push_back(seconds_since(t0));
      if (!r.identified) return {false, "chain n=" + std::to_string(n) + " not identified"};
    }
    std::sort(runs.begin(), runs.end());
    ns.push_back(n);
    ts.push_back(std::max(runs[runs.size() / 2], 1e-6));
  }
  // Least-squares slope of log t against log n (polynomial degree) and
  // against n (per-node growth factor).
  auto slope = [](const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    return sxy / sxx;
  };
  std::vector<double> logn, logt;
  for (std::size_t i = 0; i < ns.size(); ++i) logn.push_back(std::log(ns[i])), logt.push_back(std::log(ts[i]));
  double degree = slope(logn, logt);
  double per_node = std::exp(slope(ns, logt));
  bool ok = per_node < 2.0 && degree <= 6.0;
  return {ok, "n=4..12, " + fmt(ts.front() * 1e3) + " ms to " + fmt(ts.back() * 1e3) + " ms, fitted degree " +
                  fmt(degree) + ", growth per node x" + fmt(per_node)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"front-door recovery", frontdoor},
      {"natural direct effect", nde},
      {"counterfactual-data example", ctf_data},
      {"hedge certificate and witness", hedge},
      {"layer limit", layer_limit},
      {"soundness fuzz", fuzz},
      {"bounds nesting and tightness", bounds_nesting},
      {"unit selection example", unit_selection_example},
      {"regime template golden", regex_golden},
      {"chain scaling", scaling},
  };
  int failed = 0;
  auto start = Clock::now();
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.ok;
    std::cout << (o.ok ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail << " ("
              << fmt(seconds_since(t0)) << " s)" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed in "
            << fmt(seconds_since(start)) << " s" << std::endl;
  return failed == 0 ? 0 : 1;
}
