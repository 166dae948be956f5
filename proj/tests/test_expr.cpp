#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ctfid/oracle.hpp"
#include "support.hpp"

using namespace ctfid;

namespace {

CausalDiagram traffic() {
  return parse_diagram("var X\nvar Z\nvar Y\nedge X -> Z\nedge X -> Y\nedge Z -> Y\nedge Z <-> Y\n");
}

// Sum of a symbolic table over every index (all indices are event values).
double summed(const DiscreteSCM& m, const Conjunction& c, const IndexPool& pool) {
  std::vector<int> cards;
  for (int i = 0; i < pool.size(); ++i) cards.push_back(m.cards[pool.at(i).var]);
  double s = 0.0;
  for (double p : symbolic_table(m, c, cards)) s += p;
  return s;
}

}  // namespace

TEST_CASE("parse and render round trip") {
  auto g = traffic();
  for (const char* text : {"P(Y[X=1]=1)", "P(Y[X=1, Z=Z[X=0]]=1)", "P(Y[X=0]=1 | X=1, Y=0)",
                           "P(Z=0, Y[Z=1]=0)"}) {
    auto q = parse_query(text, g);
    CHECK(render(q, g) == text);
    CHECK(parse_query(render(q, g), g) == q);
  }
  std::mt19937_64 rng(21);
  for (int i = 0; i < 50; ++i) {
    auto h = testing::random_diagram(rng, 5, 0.5, 0.3, 4);
    auto q = testing::random_query(rng, h);
    CHECK(parse_query(render(q, h), h) == q);
  }
}

TEST_CASE("prime convention and named indices") {
  auto g = parse_diagram("var X card 3\nvar Y\nedge X -> Y\n");
  auto q = parse_query("P(Y[X=x'']=y')", g);
  CHECK(q.joint.events[0].resp.at(g.id("X")) == Val::of(2));
  CHECK(q.joint.events[0].value == Val::of(1));
  IndexPool pool;
  auto c = parse_conjunction("Y[X=x]=y, X=x", g, &pool);
  CHECK(pool.size() == 2);
  CHECK(c.events[1].value == Val::idx(*pool.find("x")));
  CHECK(render(c, g, &pool) == "P(Y[X=x]=y, X=x)");
}

TEST_CASE("parse errors carry positions") {
  auto g = traffic();
  CHECK_THROWS_AS(parse_query("P(Q=1)", g), ParseError);
  CHECK_THROWS_AS(parse_query("P(Y=2)", g), ParseError);
  CHECK_THROWS_AS(parse_query("P(Y[X=1, X=0]=1)", g), ParseError);
  CHECK_THROWS_AS(parse_query("P(Y[X=Z[X=0]]=1)", g), ParseError);
  CHECK_THROWS_AS(parse_query("P(Y=x'')", g), ParseError);
  try {
    parse_query("P(Y=1) extra", g);
    FAIL("no error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 7);
  }
}

TEST_CASE("conjunctions drop duplicates and compare as sets") {
  auto g = traffic();
  auto a = parse_conjunction("Y[X=1]=1, Z=0, Y[X=1]=1", g);
  auto b = parse_conjunction("Z=0, Y[X=1]=1", g);
  CHECK(a.size() == 2);
  CHECK(a == b);
}

TEST_CASE("exclusion drops non-ancestral subscripts") {
  auto g = parse_diagram("var X\nvar Z\nvar Y\nvar W\nedge X -> Z\nedge Z -> Y\nedge W -> X\n");
  auto r = parse_conjunction("Y[X=1, Z=0, W=1]=1", g).events[0].resp;
  auto e = exclusion(r, g);
  CHECK(e.keys() == VarSet{g.id("Z")});
  auto r2 = parse_conjunction("Y[X=1, W=0]=1", g).events[0].resp;
  CHECK(exclusion(r2, g).keys() == VarSet{g.id("X")});
}

TEST_CASE("exclusion preserves probability") {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 40; ++i) {
    auto g = testing::random_diagram(rng, 5, 0.4, 0.3, 3);
    auto q = testing::random_query(rng, g);
    IndexPool pool;
    auto u = unnest(q.joint, g, pool);
    auto m = random_scm(g, 100 + i);
    CHECK(summed(m, u.conj, pool) == doctest::Approx(summed(m, exclusion_set(u.conj, g), pool)).epsilon(1e-12));
  }
}

TEST_CASE("unnesting the natural direct effect") {
  auto g = traffic();
  IndexPool pool;
  auto q = parse_query("P(Y[X=1, Z=Z[X=0]]=1)", g);
  auto u = unnest(q.joint, g, pool);
  REQUIRE(u.indices.size() == 1);
  CHECK(render(u.conj, g, &pool) == "P(Y[X=1, Z=z0]=1, Z[X=0]=z0)");
  auto m = random_scm(g, 5);
  CHECK(l3_valuation(m, q.joint) == doctest::Approx(summed(m, u.conj, pool)).epsilon(1e-12));
}

TEST_CASE("identical inner responses share one index") {
  auto g = traffic();
  IndexPool pool;
  auto c = parse_conjunction("Y[Z=Z[X=0]]=1, Y[X=1, Z=Z[X=0]]=0", g);
  auto u = unnest(c, g, pool);
  CHECK(u.indices.size() == 1);
  CHECK(u.conj.size() == 3);
}

TEST_CASE("unnesting preserves probability on random models") {
  std::mt19937_64 rng(23);
  int nested = 0;
  for (int i = 0; i < 60; ++i) {
    auto g = testing::random_diagram(rng, 5, 0.5, 0.3, 3);
    auto q = testing::random_query(rng, g);
    IndexPool pool;
    auto u = unnest(q.joint, g, pool);
    nested += !u.indices.empty();
    auto m = random_scm(g, 200 + i);
    CHECK(l3_valuation(m, q.joint) == doctest::Approx(summed(m, u.conj, pool)).epsilon(1e-12));
  }
  CHECK(nested > 5);
}

TEST_CASE("ancestral set transform preserves probability") {
  std::mt19937_64 rng(24);
  int done = 0;
  for (int i = 0; i < 40; ++i) {
    auto g = testing::random_diagram(rng, 5, 0.5, 0.3, 3);
    auto q = testing::random_query(rng, g);
    IndexPool pool;
    auto flat = exclusion_set(unnest(q.joint, g, pool).conj, g);
    if (pool.size() != 0) continue;
    Conjunction anc = flat;
    for (const auto& r : ctf_ancestors(flat, g)) {
      bool present = false;
      for (const auto& e : anc.events) present = present || e.resp == r;
      if (!present) anc.add(Event{r, Val::of(static_cast<int>(rng() % g.card(r.var)))});
    }
    Conjunction t;
    try {
      t = ancestral_set_transform(anc, g);
    } catch (const ExprError&) {
      continue;
    }
    CHECK(is_ctf_factor(t, g));
    auto m = random_scm(g, 300 + i);
    CHECK(l3_valuation(m, anc) == doctest::Approx(l3_valuation(m, t)).epsilon(1e-12));
    ++done;
  }
  CHECK(done > 10);
}

TEST_CASE("ctf ancestors of the direct effect term") {
  auto g = traffic();
  auto c = parse_conjunction("Y[X=1, Z=0]=1", g);
  CHECK(ctf_ancestors(c, g).size() == 1);
  auto d = parse_conjunction("Y[X=1]=1", g);
  auto an = ctf_ancestors(d, g);
  CHECK(an.size() == 2);  // Y[X=1] and Z[X=1]
}

TEST_CASE("factorization follows c-components") {
  std::mt19937_64 rng(25);
  for (int i = 0; i < 40; ++i) {
    auto g = testing::random_diagram(rng, 6, 0.4, 0.35, 5);
    Conjunction f;
    for (VarId v = 0; v < g.size(); ++v) {
      if (rng() % 2) continue;
      Response r;
      r.var = v;
      for (VarId p : g.parents_of(v)) r.set(p, Val::of(static_cast<int>(rng() % 2)));
      f.add(Event{r, Val::of(static_cast<int>(rng() % 2))});
    }
    if (f.empty()) continue;
    REQUIRE(is_ctf_factor(f, g));
    auto blocks = ctf_factorize(f, g);
    std::size_t total = 0;
    auto comps = c_components_within(g, f.vars());
    CHECK(blocks.size() == comps.size());
    for (const auto& b : blocks) {
      total += b.size();
      bool matches = false;
      for (const auto& c : comps) matches = matches || c == b.vars();
      CHECK(matches);
    }
    CHECK(total == f.size());
  }
}

TEST_CASE("consistency and collapsing") {
  auto g = traffic();
  auto ok = parse_conjunction("Z[X=1]=0, Y[X=1, Z=0]=1", g);
  CHECK(is_consistent(ok));
  auto cf = collapse(ok);
  CHECK(cf.block == VarSet{g.id("Z"), g.id("Y")});
  CHECK(cf.values.at(g.id("X")) == Val::of(1));
  auto bad = parse_conjunction("Z[X=1]=0, Y[X=0, Z=0]=1", g);
  CHECK_FALSE(is_consistent(bad));
  CHECK(trivial_conflict(parse_conjunction("Y[X=1]=1, Y[X=1]=0", g)));
  CHECK_FALSE(trivial_conflict(parse_conjunction("Y[X=1]=1, Y[X=0]=0", g)));
}
