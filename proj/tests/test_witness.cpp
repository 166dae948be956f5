#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "ctfid/oracle.hpp"
#include "ctfid/witness.hpp"
#include "support.hpp"

using namespace ctfid;

namespace {

std::string field(const std::string& path, const std::string& key) {
  std::ifstream f(path);
  std::string line;
  while (std::getline(f, line))
    if (line.rfind(key + ":", 0) == 0) return line.substr(key.size() + 1);
  return {};
}

}  // namespace

TEST_CASE("witness for the hedge found by the engine") {
  auto g = load_diagram(testing::fixture("fig3-hedge/graph.cg"));
  auto q = parse_query("P(E[G=0, H=0]=0, F[D=0]=0)", g);
  auto r = ctfidu_plus(g, q, {RegimeSpec{}});
  REQUIRE_FALSE(r.identified);
  REQUIRE(r.fail.hedge.has_value());
  auto w = hedge_witness(g, *r.fail.hedge);
  CHECK(w.input_gap <= 1e-12);
  CHECK(w.target_gap >= 0.05);
  CHECK(induced_diagram(w.m1).size() == g.size());
  CHECK(w.smoothed_input_gap <= 20 * w.eps);
  CHECK(w.smoothed_target_gap >= 0.05 - 20 * w.eps);
}

TEST_CASE("witness for the symbolic hedge instance") {
  auto g = load_diagram(testing::fixture("fig3-hedge/graph.cg"));
  std::string path = testing::fixture("fig3-hedge/hedge.txt");
  IndexPool pool;
  Hedge h{parse_conjunction(field(path, "input"), g, &pool), parse_conjunction(field(path, "target"), g, &pool), g};
  REQUIRE(detect_ctf_hedge(h.T, h.C, h.subgraph));
  auto w = hedge_witness(g, h);
  CHECK(w.input_gap <= 1e-12);
  CHECK(w.target_gap >= 0.05);
  // Both models induce subgraphs of the diagram.
  for (const auto* m : {&w.m1, &w.m2}) {
    auto d = induced_diagram(*m);
    for (auto [a, b] : d.directed()) CHECK(g.has_edge(a, b));
  }
}

TEST_CASE("bow hedge: the effect of X is not recoverable from P(X, Y)") {
  auto g = load_diagram(testing::fixture("graphs/bow.cg"));
  IndexPool pool;
  Hedge h{parse_conjunction("X=x, Y[X=x]=y", g, &pool), parse_conjunction("Y[X=x]=y", g, &pool), g};
  REQUIRE(detect_ctf_hedge(h.T, h.C, g));
  auto w = hedge_witness(g, h);
  CHECK(w.input_gap <= 1e-12);
  CHECK(w.target_gap >= 0.05);
  // The gap is visible in the interventional quantity itself.
  auto q = parse_query("P(Y[X=0]=0)", g);
  CHECK(std::abs(l3_query(w.m1, q) - l3_query(w.m2, q)) > 0.05);
  auto obs = parse_query("P(X=0, Y=0)", g);
  CHECK(l3_query(w.m1, obs) == doctest::Approx(l3_query(w.m2, obs)).epsilon(1e-12));
}

TEST_CASE("two hedges over the same events give a two-bit witness") {
  // Same variables, two different bidirected spanning trees.
  const char* vars = "var A\nvar B\nvar Y\nedge A -> B\nedge B -> Y\n";
  auto g = parse_diagram(std::string(vars) + "edge A <-> B\nedge B <-> Y\nedge A <-> Y\n");
  auto g1 = parse_diagram(std::string(vars) + "edge A <-> B\nedge B <-> Y\n");
  auto g2 = parse_diagram(std::string(vars) + "edge A <-> Y\nedge B <-> Y\n");
  IndexPool pool;
  auto T = parse_conjunction("A=a, B[A=a]=b, Y[B=b]=y", g, &pool);
  auto C = parse_conjunction("Y[B=b]=y", g, &pool);
  Hedge h1{T, C, g1}, h2{T, C, g2};
  REQUIRE(detect_ctf_hedge(T, C, g1));
  REQUIRE(detect_ctf_hedge(T, C, g2));
  auto w = thicket_witness(g, {h1, h2});
  CHECK(w.m1.cards == std::vector<int>{4, 4, 4});
  CHECK(w.input_gap <= 1e-12);
  CHECK(w.target_gap >= 0.05);
}

TEST_CASE("per-bit construction when a root sees another hedge only through a subscript") {
  // Y's bit for the B-hedge is observed in the A-hedge input while B itself
  // is only a subscript there, so that input exposes the interventional
  // distribution the two models are built to disagree on. The literal
  // construction therefore does not match this input; the gap is recorded.
  auto g = parse_diagram("var A\nvar B\nvar Y\nedge A -> Y\nedge B -> Y\nedge A <-> Y\nedge B <-> Y\n");
  IndexPool pool;
  auto C = parse_conjunction("Y[A=a, B=b]=y", g, &pool);
  Hedge h1{parse_conjunction("A=a, Y[A=a, B=b]=y", g, &pool), C, g};
  Hedge h2{parse_conjunction("B=b, Y[A=a, B=b]=y", g, &pool), C, g};
  REQUIRE(detect_ctf_hedge(h1.T, h1.C, g));
  REQUIRE(detect_ctf_hedge(h2.T, h2.C, g));
  auto w = thicket_witness(g, {h1, h2});
  CHECK(w.target_gap >= 0.05);
  CHECK(w.input_gap == doctest::Approx(0.125));
}

TEST_CASE("witness inputs are validated") {
  auto g = load_diagram(testing::fixture("graphs/bow.cg"));
  IndexPool pool;
  Hedge not_hedge{parse_conjunction("X=x', Y[X=x]=y", g, &pool), parse_conjunction("Y[X=x]=y", g, &pool), g};
  CHECK_FALSE(detect_ctf_hedge(not_hedge.T, not_hedge.C, g));
  CHECK_THROWS_AS(hedge_witness(g, not_hedge), ExprError);
  CHECK_THROWS_AS(thicket_witness(g, {}), ExprError);
  CHECK(symbol_cards(not_hedge.T, 2) == std::vector<int>{2, 2, 2});
}
