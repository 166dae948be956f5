#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <random>

#include "ctfid/oracle.hpp"
#include "support.hpp"

using namespace ctfid;

namespace {

// Straight enumeration with eval_response, independent of the compiled
// kernels used by the oracle.
double brute_force(const DiscreteSCM& m, const Conjunction& w) {
  std::vector<int> u(m.exo.size(), 0);
  double total = 0.0;
  for (;;) {
    double p = 1.0;
    for (std::size_t i = 0; i < u.size(); ++i) p *= m.exo[i].p[u[i]];
    bool ok = true;
    for (const auto& e : w.events) ok = ok && eval_response(m, u, e.resp) == e.value.value();
    if (ok) total += p;
    std::size_t i = u.size();
    while (i > 0) {
      --i;
      if (++u[i] < m.exo[i].card) break;
      u[i] = 0;
      if (i == 0) return total;
    }
    if (u.empty()) return total;
  }
}

Conjunction concrete(const Conjunction& c, const std::vector<int>& sym) {
  auto fix = [&](Val v) { return v.is_index() ? Val::of(sym[v.index()]) : v; };
  Conjunction out;
  for (const auto& e : c.events) {
    Event x;
    x.resp.var = e.resp.var;
    for (const auto& [k, t] : e.resp.sub) x.resp.set(k, fix(t.val));
    x.value = fix(e.value);
    out.events.push_back(x);
  }
  return out;
}

}  // namespace

TEST_CASE("exact valuation matches straight enumeration") {
  std::mt19937_64 rng(51);
  for (int i = 0; i < 40; ++i) {
    auto g = testing::random_diagram(rng, 2 + i % 4, 0.5, 0.3, 3);
    auto m = random_scm(g, 800 + i);
    auto q = testing::random_query(rng, g);
    CHECK(l3_valuation(m, q.joint) == doctest::Approx(brute_force(m, q.joint)).epsilon(1e-12));
  }
}

TEST_CASE("parallel kernels agree with the serial reference") {
  std::mt19937_64 rng(52);
  for (int i = 0; i < 30; ++i) {
    auto g = testing::random_diagram(rng, 3 + i % 4, 0.5, 0.3, 4);
    auto m = random_scm(g, 900 + i);
    auto q = testing::random_query(rng, g);
    CHECK(l3_valuation(m, q.joint) == doctest::Approx(l3_valuation_serial(m, q.joint)).epsilon(1e-13));
    auto t = regime_regex(g, testing::random_regimes(rng, g).front());
    auto cards = t.cards(g);
    auto a = symbolic_table(m, t.events, cards);
    auto b = symbolic_table_serial(m, t.events, cards);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-13));
  }
}

TEST_CASE("symbolic tables equal valuations of each instantiation") {
  std::mt19937_64 rng(53);
  for (int i = 0; i < 15; ++i) {
    auto g = testing::random_diagram(rng, 3 + i % 3, 0.5, 0.3, 3);
    auto m = random_scm(g, 1000 + i);
    auto t = regime_regex(g, testing::random_regimes(rng, g).front());
    auto cards = t.cards(g);
    auto table = symbolic_table(m, t.events, cards);
    std::vector<int> sym(cards.size());
    for (std::size_t off = 0; off < table.size(); ++off) {
      std::size_t k = off;
      for (std::size_t j = cards.size(); j-- > 0;) {
        sym[j] = static_cast<int>(k % cards[j]);
        k /= cards[j];
      }
      CHECK(table[off] == doctest::Approx(l3_valuation(m, concrete(t.events, sym))).epsilon(1e-12));
    }
  }
}

TEST_CASE("conditional queries divide by the evidence") {
  auto g = load_diagram(testing::fixture("graphs/bow.cg"));
  auto m = random_scm(g, 3);
  auto q = parse_query("P(Y[X=1]=1 | X=0, Y=0)", g);
  Conjunction all = q.joint;
  for (const auto& e : q.given->events) all.add(e);
  CHECK(l3_query(m, q) == doctest::Approx(brute_force(m, all) / brute_force(m, *q.given)).epsilon(1e-12));
}

TEST_CASE("Monte Carlo estimates fall within four standard errors") {
  std::mt19937_64 rng(54);
  for (int i = 0; i < 10; ++i) {
    auto g = testing::random_diagram(rng, 4, 0.5, 0.3, 3);
    auto m = random_scm(g, 1100 + i);
    auto q = testing::random_query(rng, g);
    double exact = l3_query(m, q);
    auto est = l3_monte_carlo(m, q, 20000, 77 + i);
    CHECK(std::abs(est.value - exact) <= 4 * est.stderr_ + 1e-3);
  }
}

TEST_CASE("sampled regime rows follow the exact table") {
  auto g = load_diagram(testing::fixture("fig1-nde/graph.cg"));
  auto m = random_scm(g, 9);
  auto spec = parse_regime("ctf-rand(X -> Y)", g);
  auto tab = regime_distribution(m, spec);
  const std::size_t n = 40000;
  auto data = sample_regime(m, spec, n, 5);
  CHECK(data.columns == std::vector<std::string>{"x", "x'", "z", "y"});
  std::map<std::size_t, double> freq;
  for (const auto& row : data.rows) freq[tab.offset(row)] += 1.0 / n;
  // Each action value is drawn uniformly, so rows have mass table / |X|.
  for (std::size_t off = 0; off < tab.p.size(); ++off) {
    double p = tab.p[off] / 2.0;
    double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(freq[off] - p) <= 5 * se + 1e-4);
  }
  auto csv = dataset_csv(data);
  CHECK(csv.rfind("x,x',z,y\n", 0) == 0);
}

TEST_CASE("each action setting of a regime table sums to one") {
  auto g = load_diagram(testing::fixture("fig11-ctfdata/graph.cg"));
  auto spec = load_regimes(testing::fixture("fig11-ctfdata/regimes.txt"), g).front();
  auto m = random_scm(g, 2);
  auto t = regime_regex(g, spec);
  auto tab = regime_distribution(m, spec);
  double total = 0.0;
  for (double p : tab.p) total += p;
  double settings = 1.0;
  for (int s : t.action_syms) settings *= tab.cards[s];
  CHECK(total == doctest::Approx(settings));
}

TEST_CASE("enumeration cap") {
  auto g = load_diagram(testing::fixture("fig11-ctfdata/graph.cg"));
  auto m = random_scm(g, 2);
  setenv("CTFID_CAP", "1024", 1);
  CHECK(enumeration_cap() == 1024);
  CHECK_THROWS_AS(l3_valuation(m, parse_conjunction("Y=1", g)), ScmError);
  CHECK_THROWS_AS(regime_distribution(m, RegimeSpec{}), ScmError);
  // Monte Carlo is not bounded by the cap.
  CHECK_NOTHROW(l3_monte_carlo(m, parse_query("P(Y=1)", g), 100, 1));
  unsetenv("CTFID_CAP");
  CHECK(enumeration_cap() == (std::uint64_t{1} << 24));
}

TEST_CASE("symbolic valuation needs concrete values") {
  auto g = load_diagram(testing::fixture("graphs/bow.cg"));
  auto m = random_scm(g, 2);
  IndexPool pool;
  CHECK_THROWS_AS(l3_valuation(m, parse_conjunction("Y[X=x]=1", g, &pool)), ScmError);
}
