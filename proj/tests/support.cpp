#include "support.hpp"

#include <algorithm>
#include <cmath>

#include "ctfid/oracle.hpp"

#ifndef CTFID_FIXTURES
#define CTFID_FIXTURES "fixtures"
#endif

namespace ctfid::testing {

namespace {

bool coin(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

int pick(std::mt19937_64& rng, int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

}  // namespace

CausalDiagram random_diagram(std::mt19937_64& rng, int n, double p_edge, double p_bi, int max_bi) {
  CausalDiagram g;
  for (int i = 0; i < n; ++i) g.add_variable("V" + std::to_string(i), 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng, p_edge)) g.add_edge(i, j);
  int bi = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (bi < max_bi && coin(rng, p_bi)) {
        g.add_bidirected(i, j);
        ++bi;
      }
  return g;
}

Query random_query(std::mt19937_64& rng, const CausalDiagram& g) {
  auto make_response = [&](VarId v, int depth, auto&& self) -> Response {
    Response r;
    r.var = v;
    VarSet an = ancestors(g, {v});
    an.erase(v);
    for (VarId a : an) {
      if (!coin(rng, 0.5)) continue;
      if (depth > 0 && coin(rng, 0.2)) {
        Response inner = self(a, depth - 1, self);
        r.sub[a] = Term{Val{}, std::make_shared<const Response>(inner)};
      } else {
        r.set(a, Val::of(pick(rng, g.card(a))));
      }
    }
    return r;
  };
  Query q;
  int n = 1 + pick(rng, std::min(3, g.size()));
  for (int i = 0; i < n; ++i) {
    VarId v = pick(rng, g.size());
    q.joint.add(Event{make_response(v, 1, make_response), Val::of(pick(rng, g.card(v)))});
  }
  if (coin(rng, 0.3)) {
    Conjunction given;
    VarId v = pick(rng, g.size());
    given.add(Event{make_response(v, 0, make_response), Val::of(pick(rng, g.card(v)))});
    q.given = given;
  }
  return q;
}

std::vector<RegimeSpec> random_regimes(std::mt19937_64& rng, const CausalDiagram& g) {
  std::vector<RegimeSpec> out;
  int n = 1 + pick(rng, 3);
  for (int k = 0; k < n; ++k) {
    RegimeSpec spec;
    int actions = pick(rng, 3);
    for (int a = 0; a < actions; ++a) {
      VarId s = pick(rng, g.size());
      const auto& ch = g.children_of(s);
      if (ch.empty()) continue;
      Action act;
      act.source = s;
      if (coin(rng, 0.4)) {
        act.kind = Action::Kind::Rand;
      } else {
        act.kind = Action::Kind::CtfRand;
        for (VarId c : ch)
          if (coin(rng, 0.6)) act.targets.insert(c);
        if (act.targets.empty()) act.targets.insert(ch[pick(rng, static_cast<int>(ch.size()))]);
      }
      bool clash = false;
      for (const auto& b : spec.actions) clash = clash || b.source == s;
      if (!clash) spec.actions.push_back(act);
    }
    out.push_back(normalize_regime(spec, g));
  }
  return out;
}

SoundnessCheck check_soundness(const CausalDiagram& g, const Query& q, const std::vector<RegimeSpec>& regs,
                               int models, std::uint64_t seed) {
  SoundnessCheck out;
  IdResult res = ctfidu_plus(g, q, regs);
  out.identified = res.identified;
  if (!res.identified) return out;
  for (int i = 0; i < models; ++i) {
    DiscreteSCM m = random_scm(g, seed + static_cast<std::uint64_t>(i));
    std::vector<RegimeTable> tables;
    for (const auto& r : regs) tables.push_back(regime_distribution(m, r));
    double diff = std::abs(evaluate_estimand(res.estimand, tables) - l3_query(m, q));
    out.worst = std::max(out.worst, diff);
  }
  return out;
}

CausalDiagram chain(int n) {
  CausalDiagram g;
  for (int i = 0; i < n; ++i) g.add_variable("V" + std::to_string(i), 2);
  for (int i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);
  return g;
}

NodePtr frontdoor_reference(const CausalDiagram& g, int x, int y) {
  // Index ids only need to be distinct; alpha equivalence renames them.
  VarId X = g.id("X"), Z = g.id("Z"), Y = g.id("Y");
  Val z0 = Val::idx(0), x0 = Val::idx(1);
  auto in = [](VarSet kept, Val xv, Val zv, Val yv) { return make_input(InputRef{0, kept, {xv, zv, yv}}); };
  Val zero = Val::of(0);
  auto pz_given_x = make_quotient(in({X, Z}, Val::of(x), z0, zero), in({X}, Val::of(x), zero, zero));
  auto inner = make_sum({1}, make_product({in({X}, x0, zero, zero),
                                           make_quotient(in({X, Z, Y}, x0, z0, Val::of(y)), in({X, Z}, x0, z0, zero))}));
  return make_sum({0}, make_product({pz_given_x, inner}));
}

std::string fixture(const std::string& rel) { return std::string(CTFID_FIXTURES) + "/" + rel; }

}  // namespace ctfid::testing
