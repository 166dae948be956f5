#include "ctfid/scm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace ctfid {

VarId DiscreteSCM::id(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ScmError("unknown endogenous variable '" + name + "'");
  return static_cast<VarId>(it - names.begin());
}

namespace {

std::size_t rows_of(const DiscreteSCM& m, const Mechanism& mc) {
  std::size_t n = 1;
  for (int e : mc.exo) n *= m.exo.at(e).card;
  for (VarId p : mc.parents) n *= m.cards.at(p);
  return n;
}

}  // namespace

void DiscreteSCM::validate() const {
  if (cards.size() != names.size() || mech.size() != names.size())
    throw ScmError("every endogenous variable needs a card and a mechanism");
  std::set<std::string> seen;
  for (int v = 0; v < size(); ++v) {
    if (!seen.insert(names[v]).second) throw ScmError("duplicate variable '" + names[v] + "'");
    if (cards[v] < 1) throw ScmError("variable '" + names[v] + "' has an empty domain");
  }
  for (const auto& e : exo) {
    if (e.card < 1 || static_cast<int>(e.p.size()) != e.card)
      throw ScmError("exogenous '" + e.name + "' has a malformed distribution");
    double s = 0.0;
    for (double x : e.p) {
      if (x < 0.0 || !std::isfinite(x)) throw ScmError("exogenous '" + e.name + "' has a negative weight");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ScmError("exogenous '" + e.name + "' does not sum to 1");
  }
  for (int v = 0; v < size(); ++v) {
    const auto& mc = mech[v];
    for (int e : mc.exo)
      if (e < 0 || e >= static_cast<int>(exo.size()))
        throw ScmError("mechanism of '" + names[v] + "' reads an unknown exogenous variable");
    for (VarId p : mc.parents)
      if (p < 0 || p >= size() || p == v)
        throw ScmError("mechanism of '" + names[v] + "' reads an invalid parent");
    if (mc.table.size() != rows_of(*this, mc))
      throw ScmError("mechanism of '" + names[v] + "' is not total over its inputs");
    for (int x : mc.table)
      if (x < 0 || x >= cards[v])
        throw ScmError("mechanism of '" + names[v] + "' leaves the domain");
  }
  induced_diagram(*this);
}

std::uint64_t DiscreteSCM::exogenous_states() const {
  std::uint64_t n = 1;
  for (const auto& e : exo) {
    if (n > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(e.card))
      return std::numeric_limits<std::uint64_t>::max();
    n *= e.card;
  }
  return n;
}

CausalDiagram induced_diagram(const DiscreteSCM& m) {
  CausalDiagram g;
  for (int v = 0; v < m.size(); ++v) g.add_variable(m.names[v], std::max(2, m.cards[v]));
  for (int v = 0; v < m.size(); ++v)
    for (VarId p : m.mech[v].parents) g.add_edge(p, v);
  std::map<int, std::vector<VarId>> readers;
  for (int v = 0; v < m.size(); ++v)
    for (int e : m.mech[v].exo) readers[e].push_back(v);
  for (const auto& [e, vs] : readers)
    for (std::size_t i = 0; i < vs.size(); ++i)
      for (std::size_t j = i + 1; j < vs.size(); ++j)
        if (vs[i] != vs[j]) g.add_bidirected(vs[i], vs[j]);
  return g;
}

// ---------------------------------------------------------------- json

nlohmann::json scm_to_json(const DiscreteSCM& m) {
  using nlohmann::json;
  json endo = json::array(), ex = json::array(), mech = json::array();
  for (int v = 0; v < m.size(); ++v) endo.push_back({{"name", m.names[v]}, {"card", m.cards[v]}});
  for (const auto& e : m.exo) ex.push_back({{"name", e.name}, {"card", e.card}, {"p", e.p}});
  for (int v = 0; v < m.size(); ++v) {
    std::vector<std::string> exo_names, parent_names;
    for (int e : m.mech[v].exo) exo_names.push_back(m.exo[e].name);
    for (VarId p : m.mech[v].parents) parent_names.push_back(m.names[p]);
    mech.push_back({{"var", m.names[v]},
                    {"exo", exo_names},
                    {"parents", parent_names},
                    {"table", m.mech[v].table}});
  }
  return {{"endogenous", endo}, {"exogenous", ex}, {"mechanisms", mech}};
}

DiscreteSCM scm_from_json(const nlohmann::json& j) {
  DiscreteSCM m;
  try {
    for (const auto& e : j.at("endogenous")) {
      m.names.push_back(e.at("name").get<std::string>());
      m.cards.push_back(e.at("card").get<int>());
    }
    std::map<std::string, int> exo_id;
    for (const auto& e : j.at("exogenous")) {
      Exogenous x{e.at("name").get<std::string>(), e.at("card").get<int>(),
                  e.at("p").get<std::vector<double>>()};
      if (!exo_id.emplace(x.name, static_cast<int>(m.exo.size())).second)
        throw ScmError("duplicate exogenous '" + x.name + "'");
      m.exo.push_back(x);
    }
    m.mech.resize(m.names.size());
    std::vector<bool> have(m.names.size(), false);
    for (const auto& mc : j.at("mechanisms")) {
      VarId v = m.id(mc.at("var").get<std::string>());
      if (have[v]) throw ScmError("two mechanisms for '" + m.names[v] + "'");
      have[v] = true;
      Mechanism x;
      for (const auto& n : mc.at("exo")) {
        auto it = exo_id.find(n.get<std::string>());
        if (it == exo_id.end()) throw ScmError("unknown exogenous '" + n.get<std::string>() + "'");
        x.exo.push_back(it->second);
      }
      for (const auto& n : mc.at("parents")) x.parents.push_back(m.id(n.get<std::string>()));
      x.table = mc.at("table").get<std::vector<int>>();
      m.mech[v] = x;
    }
    for (std::size_t v = 0; v < have.size(); ++v)
      if (!have[v]) throw ScmError("no mechanism for '" + m.names[v] + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ScmError(std::string("malformed SCM file: ") + e.what());
  }
  m.validate();
  return m;
}

DiscreteSCM load_scm(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ScmError("cannot open SCM file '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ScmError("cannot parse '" + path + "': " + e.what());
  }
  return scm_from_json(j);
}

void save_scm(const DiscreteSCM& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ScmError("cannot write '" + path + "'");
  f << scm_to_json(m).dump(1) << "\n";
}

// ---------------------------------------------------------------- evaluation

namespace {

std::vector<VarId> mechanism_order(const DiscreteSCM& m) {
  std::vector<int> indeg(m.size(), 0);
  std::vector<std::vector<VarId>> kids(m.size());
  for (int v = 0; v < m.size(); ++v)
    for (VarId p : m.mech[v].parents) {
      indeg[v]++;
      kids[p].push_back(v);
    }
  std::vector<VarId> order, ready;
  for (int v = m.size() - 1; v >= 0; --v)
    if (!indeg[v]) ready.push_back(v);
  while (!ready.empty()) {
    VarId v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (VarId c : kids[v])
      if (--indeg[c] == 0) ready.push_back(c);
  }
  if (static_cast<int>(order.size()) != m.size()) throw ScmError("mechanisms form a cycle");
  return order;
}

}  // namespace

std::vector<int> eval_unit(const DiscreteSCM& m, const std::vector<int>& u, const EdgeIntervention& ei,
                           const std::map<VarId, int>& fixed) {
  std::vector<int> val(m.size(), 0);
  for (VarId v : mechanism_order(m)) {
    if (auto it = fixed.find(v); it != fixed.end()) {
      val[v] = it->second;
      continue;
    }
    const auto& mc = m.mech[v];
    std::size_t off = 0;
    for (int e : mc.exo) off = off * m.exo[e].card + u.at(e);
    for (VarId p : mc.parents) {
      int x = val[p];
      if (auto it = ei.find({p, v}); it != ei.end()) x = it->second;
      off = off * m.cards[p] + x;
    }
    val[v] = mc.table[off];
  }
  return val;
}

int eval_response(const DiscreteSCM& m, const std::vector<int>& u, const Response& r) {
  std::map<VarId, int> fixed;
  for (const auto& [k, t] : r.sub) {
    if (t.is_nested()) {
      fixed[k] = eval_response(m, u, *t.nested);
    } else {
      if (t.val.is_index()) throw ScmError("cannot evaluate a symbolic subscript");
      fixed[k] = t.val.value();
    }
  }
  return eval_unit(m, u, {}, fixed)[r.var];
}

// ---------------------------------------------------------------- generation

namespace {

std::vector<double> random_weights(std::mt19937_64& rng, int k) {
  std::exponential_distribution<double> gamma1(1.0);
  std::vector<double> w(k);
  for (auto& x : w) x = gamma1(rng);
  double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x = std::max(x / s, 1e-3);
  s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= s;
  // Pin the total to exactly one within rounding.
  w.back() = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);
  return w;
}

std::vector<int> decode(std::size_t off, const std::vector<int>& cards) {
  std::vector<int> a(cards.size());
  for (std::size_t i = cards.size(); i-- > 0;) {
    a[i] = static_cast<int>(off % cards[i]);
    off /= cards[i];
  }
  return a;
}

}  // namespace

DiscreteSCM random_scm(const CausalDiagram& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  DiscreteSCM m;
  for (VarId v = 0; v < g.size(); ++v) {
    m.names.push_back(g.name(v));
    m.cards.push_back(g.card(v));
  }
  std::vector<std::vector<int>> exo_of(g.size());
  for (auto [a, b] : g.bidirected()) {
    int e = static_cast<int>(m.exo.size());
    m.exo.push_back({"U_" + g.name(a) + "_" + g.name(b), 2, random_weights(rng, 2)});
    exo_of[a].push_back(e);
    exo_of[b].push_back(e);
  }
  std::vector<int> priv(g.size());
  for (VarId v = 0; v < g.size(); ++v) {
    priv[v] = static_cast<int>(m.exo.size());
    m.exo.push_back({"U_" + g.name(v), g.card(v) + 1, random_weights(rng, g.card(v) + 1)});
  }
  for (VarId v = 0; v < g.size(); ++v) {
    Mechanism mc;
    mc.exo = exo_of[v];
    mc.exo.push_back(priv[v]);
    const auto& pa = g.parents_of(v);
    mc.parents.assign(pa.begin(), pa.end());
    std::vector<int> cards;
    for (int e : mc.exo) cards.push_back(m.exo[e].card);
    for (VarId p : mc.parents) cards.push_back(g.card(p));
    std::size_t rows = 1;
    for (int c : cards) rows *= c;
    std::size_t pos = mc.exo.size() - 1;  // private exogenous slot
    std::map<std::vector<int>, std::vector<int>> onto;
    mc.table.resize(rows);
    for (std::size_t off = 0; off < rows; ++off) {
      auto a = decode(off, cards);
      int k = a[pos];
      a[pos] = 0;
      auto [it, fresh] = onto.try_emplace(a);
      if (fresh) {
        std::vector<int> vals(g.card(v));
        std::iota(vals.begin(), vals.end(), 0);
        vals.push_back(static_cast<int>(rng() % g.card(v)));
        std::shuffle(vals.begin(), vals.end(), rng);
        it->second = vals;
      }
      mc.table[off] = it->second[k];
    }
    m.mech.push_back(mc);
  }
  m.validate();
  return m;
}

DiscreteSCM smooth_scm(const DiscreteSCM& m, double eps) {
  if (eps < 0.0 || eps >= 1.0) throw ScmError("smoothing weight must lie in [0, 1)");
  DiscreteSCM out = m;
  for (int v = 0; v < m.size(); ++v) {
    int k = m.cards[v];
    Exogenous n{"N_" + m.names[v], k + 1, std::vector<double>(k + 1, eps / k)};
    n.p[0] = 1.0 - eps;
    int nid = static_cast<int>(out.exo.size());
    out.exo.push_back(n);

    const auto& old = m.mech[v];
    Mechanism mc = old;
    mc.exo.push_back(nid);
    std::vector<int> cards;
    for (int e : mc.exo) cards.push_back(out.exo[e].card);
    for (VarId p : mc.parents) cards.push_back(m.cards[p]);
    std::size_t rows = 1;
    for (int c : cards) rows *= c;
    mc.table.assign(rows, 0);
    std::size_t npos = old.exo.size();
    for (std::size_t off = 0; off < rows; ++off) {
      auto a = decode(off, cards);
      if (a[npos] > 0) {
        mc.table[off] = a[npos] - 1;
        continue;
      }
      std::size_t o = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (i == npos) continue;
        o = o * cards[i] + a[i];
      }
      mc.table[off] = old.table[o];
    }
    out.mech[v] = mc;
  }
  out.validate();
  return out;
}

}  // namespace ctfid
