#include "ctfid/witness.hpp"

#include <algorithm>
#include <cmath>

#include "ctfid/oracle.hpp"

namespace ctfid {

namespace {

// Renumbers the indices of `c` densely from 0 in order of appearance.
Conjunction compact(const Conjunction& c, int& count) {
  std::map<int, int> ids;
  auto map = [&](Val v) {
    if (!v.is_index()) return v;
    auto [it, fresh] = ids.emplace(v.index(), static_cast<int>(ids.size()));
    return Val::idx(it->second);
  };
  Conjunction out;
  for (const auto& e : c.events) {
    Event x;
    x.resp.var = e.resp.var;
    for (const auto& [k, t] : e.resp.sub) {
      if (t.is_nested()) throw ScmError("witness events must be un-nested");
      x.resp.set(k, map(t.val));
    }
    x.value = map(e.value);
    out.events.push_back(x);
  }
  count = static_cast<int>(ids.size());
  return out;
}

struct Built {
  DiscreteSCM m1, m2;
};

Built build_models(const CausalDiagram& g, const std::vector<Hedge>& hs) {
  const int bits = static_cast<int>(hs.size());
  const int card = 1 << bits;
  const VarSet cv = hs.front().C.vars();
  std::vector<VarSet> tv;
  for (const auto& h : hs) tv.push_back(h.T.vars());

  DiscreteSCM base;
  for (VarId v = 0; v < g.size(); ++v) {
    base.names.push_back(g.name(v));
    base.cards.push_back(card);
  }
  struct Latent {
    int bit;
    VarId a, b;
  };
  std::vector<Latent> latents;
  std::vector<std::pair<int, VarId>> privates;  // (bit, variable)
  for (int i = 0; i < bits; ++i) {
    for (auto [a, b] : hs[i].subgraph.bidirected()) {
      if (!tv[i].count(a) || !tv[i].count(b)) continue;
      latents.push_back({i, a, b});
      base.exo.push_back({"L" + std::to_string(i) + "_" + g.name(a) + "_" + g.name(b), 2, {0.5, 0.5}});
    }
  }
  const int nlat = static_cast<int>(latents.size());
  for (VarId v = 0; v < g.size(); ++v)
    for (int i = 0; i < bits; ++i)
      if (!tv[i].count(v)) {
        privates.push_back({i, v});
        base.exo.push_back({"R" + std::to_string(i) + "_" + g.name(v), 2, {0.5, 0.5}});
      }

  auto make = [&](bool second) {
    DiscreteSCM m = base;
    for (VarId v = 0; v < g.size(); ++v) {
      Mechanism mc;
      for (int l = 0; l < nlat; ++l)
        if (latents[l].a == v || latents[l].b == v) mc.exo.push_back(l);
      for (std::size_t p = 0; p < privates.size(); ++p)
        if (privates[p].second == v) mc.exo.push_back(nlat + static_cast<int>(p));
      VarSet pa;
      for (int i = 0; i < bits; ++i) {
        if (!tv[i].count(v)) continue;
        for (VarId p : hs[i].subgraph.parents_of(v))
          if (tv[i].count(p) && !(cv.count(p) && cv.count(v))) pa.insert(p);
      }
      mc.parents.assign(pa.begin(), pa.end());

      std::vector<int> in_cards;
      for (int e : mc.exo) in_cards.push_back(m.exo[e].card);
      in_cards.insert(in_cards.end(), mc.parents.size(), card);
      std::size_t rows = 1;
      for (int c : in_cards) rows *= c;
      mc.table.resize(rows);
      std::vector<int> a(in_cards.size());
      for (std::size_t off = 0; off < rows; ++off) {
        std::size_t k = off;
        for (std::size_t j = in_cards.size(); j-- > 0;) {
          a[j] = static_cast<int>(k % in_cards[j]);
          k /= in_cards[j];
        }
        int value = 0;
        for (int i = 0; i < bits; ++i) {
          int bit = 0;
          if (!tv[i].count(v)) {
            for (std::size_t j = 0; j < mc.exo.size(); ++j) {
              int e = mc.exo[j];
              if (e >= nlat && privates[e - nlat].first == i) bit = a[j];
            }
          } else {
            bool cut = second && cv.count(v);
            auto outside = [&](VarId w) { return tv[i].count(w) && !cv.count(w); };
            for (std::size_t j = 0; j < mc.exo.size(); ++j) {
              int e = mc.exo[j];
              if (e >= nlat || latents[e].bit != i) continue;
              VarId other = latents[e].a == v ? latents[e].b : latents[e].a;
              if (cut && outside(other)) continue;
              bit ^= a[j];
            }
            for (std::size_t j = 0; j < mc.parents.size(); ++j) {
              VarId p = mc.parents[j];
              if (!hs[i].subgraph.has_edge(p, v) || !tv[i].count(p)) continue;
              if (cut && outside(p)) continue;
              bit ^= (a[mc.exo.size() + j] >> i) & 1;
            }
          }
          value |= bit << i;
        }
        mc.table[off] = value;
      }
      m.mech.push_back(mc);
    }
    m.validate();
    return m;
  };
  return {make(false), make(true)};
}

double input_gap(const DiscreteSCM& m1, const DiscreteSCM& m2, const std::vector<Hedge>& hs,
                 int card) {
  double gap = 0.0;
  for (const auto& h : hs) {
    int n = 0;
    Conjunction t = compact(h.T, n);
    std::vector<int> cards(n, card);
    auto p1 = symbolic_table(m1, t, cards), p2 = symbolic_table(m2, t, cards);
    for (std::size_t i = 0; i < p1.size(); ++i) gap = std::max(gap, std::abs(p1[i] - p2[i]));
  }
  return gap;
}

// Root values become fresh symbols so every outcome is tabulated; the
// remaining symbols are settings of the subscripts.
double target_gap(const DiscreteSCM& m1, const DiscreteSCM& m2, const Conjunction& roots, int card) {
  int n = 0;
  Conjunction c = compact(roots, n);
  std::vector<int> value_sym;
  for (auto& e : c.events) {
    value_sym.push_back(n);
    e.value = Val::idx(n++);
  }
  std::vector<int> cards(n, card);
  auto p1 = symbolic_table(m1, c, cards), p2 = symbolic_table(m2, c, cards);
  std::map<std::vector<int>, std::pair<double, double>> even;
  std::vector<int> a(n);
  for (std::size_t off = 0; off < p1.size(); ++off) {
    std::size_t k = off;
    for (int j = n; j-- > 0;) {
      a[j] = static_cast<int>(k % card);
      k /= card;
    }
    int parity = 0;
    for (int s : value_sym) parity ^= a[s] & 1;
    std::vector<int> setting = a;
    for (int s : value_sym) setting[s] = 0;
    auto& slot = even[setting];
    if (parity == 0) {
      slot.first += p1[off];
      slot.second += p2[off];
    }
  }
  double gap = 1.0;
  for (const auto& [s, pr] : even) gap = std::min(gap, std::abs(pr.first - pr.second));
  return gap;
}

}  // namespace

std::vector<int> symbol_cards(const Conjunction& events, int card) {
  int n = 0;
  compact(events, n);
  return std::vector<int>(n, card);
}

WitnessReport thicket_witness(const CausalDiagram& g, const std::vector<Hedge>& hedges, double eps) {
  if (hedges.empty()) throw ExprError("witness needs at least one hedge");
  for (const auto& h : hedges) {
    if (!detect_ctf_hedge(h.T, h.C, h.subgraph)) throw ExprError("input is not a counterfactual hedge");
    if (!(h.C == hedges.front().C)) throw ExprError("hedges of a thicket must share their roots");
    if (h.subgraph.size() != g.size()) throw ExprError("hedge subgraph does not match the diagram");
  }
  const int card = 1 << hedges.size();
  Built b = build_models(g, hedges);
  WitnessReport r;
  r.eps = eps;
  r.m1 = b.m1;
  r.m2 = b.m2;
  r.input_gap = input_gap(r.m1, r.m2, hedges, card);
  r.target_gap = target_gap(r.m1, r.m2, hedges.front().C, card);
  r.s1 = smooth_scm(r.m1, eps);
  r.s2 = smooth_scm(r.m2, eps);
  r.smoothed_input_gap = input_gap(r.s1, r.s2, hedges, card);
  r.smoothed_target_gap = target_gap(r.s1, r.s2, hedges.front().C, card);
  return r;
}

WitnessReport hedge_witness(const CausalDiagram& g, const Hedge& h, double eps) {
  return thicket_witness(g, {h}, eps);
}

}  // namespace ctfid
