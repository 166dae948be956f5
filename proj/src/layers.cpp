#include "ctfid/layers.hpp"

namespace ctfid {

std::string layer_name(Layer l) {
  switch (l) {
    case Layer::L1:
      return "L1";
    case Layer::L2:
      return "L2";
    case Layer::L2_25:
      return "L2.25";
    case Layer::L2_5:
      return "L2.5";
    case Layer::L3:
      return "L3-not-L2.5";
  }
  return "?";
}

namespace {

Conjunction prepared(const CausalDiagram& g, const Conjunction& w) {
  IndexPool pool;
  return exclusion_set(unnest(w, g, pool).conj, g);
}

bool ancestors_realizable(const std::vector<Response>& an) {
  for (std::size_t i = 0; i < an.size(); ++i)
    for (std::size_t j = i + 1; j < an.size(); ++j)
      if (an[i].var == an[j].var) return false;
  return true;
}

}  // namespace

bool realizable_check(const CausalDiagram& g, const Conjunction& w) {
  return ancestors_realizable(ctf_ancestors(prepared(g, w), g));
}

Layer classify_layer(const CausalDiagram& g, const Query& q) {
  Conjunction all = q.joint;
  if (q.given)
    for (const auto& e : q.given->events) all.add(e);
  Conjunction w = prepared(g, all);

  bool plain = true;
  for (const auto& e : w.events) plain = plain && e.resp.sub.empty();
  if (plain) return Layer::L1;

  // One interventional world: a single consistent subscript vector that,
  // after exclusion, reproduces every response.
  Response u;
  bool consistent = true;
  for (const auto& e : w.events)
    for (const auto& [k, t] : e.resp.sub) {
      auto it = u.sub.find(k);
      if (it != u.sub.end() && compare(it->second, t) != 0) consistent = false;
      u.sub[k] = t;
    }
  if (consistent) {
    bool single_world = true;
    for (const auto& e : w.events) {
      Response r = u;
      r.var = e.resp.var;
      single_world = single_world && exclusion(r, g) == e.resp;
    }
    if (single_world) return Layer::L2;
  }

  auto an = ctf_ancestors(w, g);
  if (!ancestors_realizable(an)) return Layer::L3;
  std::map<VarId, Term> action;
  bool one_action = true;
  for (const auto& r : an)
    for (const auto& [k, t] : r.sub) {
      auto [it, fresh] = action.emplace(k, t);
      if (!fresh && compare(it->second, t) != 0) one_action = false;
    }
  return one_action ? Layer::L2_25 : Layer::L2_5;
}

}  // namespace ctfid
