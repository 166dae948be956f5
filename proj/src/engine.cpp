#include "ctfid/engine.hpp"

#include <algorithm>
#include <functional>
#include <queue>

namespace ctfid {

// ---------------------------------------------------------------- hedges

bool detect_ctf_forest(const Conjunction& T, const Conjunction& C, const CausalDiagram& g) {
  VarSet tv;
  for (const auto& e : T.events)
    if (!tv.insert(e.resp.var).second) return false;
  for (const auto& e : C.events)
    if (!T.contains(e)) return false;
  if (C.empty()) return false;
  if (!bidirected_spanning_tree_check(g, tv)) return false;
  if (ancestors_within(g, tv, C.vars()) != tv) return false;
  for (VarId v : tv) {
    int kids = 0;
    for (VarId c : g.children_of(v)) kids += tv.count(c) ? 1 : 0;
    if (kids > 1) return false;
  }
  return true;
}

bool detect_ctf_hedge(const Conjunction& T, const Conjunction& C, const CausalDiagram& g) {
  if (!detect_ctf_forest(T, C, g) || T == C) return false;
  VarSet tv = T.vars(), cv = C.vars();
  auto event_of = [&](VarId v) -> const Event& {
    for (const auto& e : T.events)
      if (e.resp.var == v) return e;
    throw ExprError("missing event");
  };
  for (const auto& e : T.events) {
    if (cv.count(e.resp.var)) continue;
    for (VarId c : g.children_of(e.resp.var)) {
      if (!tv.count(c)) continue;
      const Event& child = event_of(c);
      auto it = child.resp.sub.find(e.resp.var);
      if (it == child.resp.sub.end() || it->second.is_nested() || it->second.val != e.value)
        return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- engine core

namespace {

using Binding = std::map<int, Val>;
using Builder = std::function<NodePtr(const Binding&)>;

struct Failure {
  int regime = -1;
  std::vector<Event> T, C;
  std::map<VarId, VarId> child_of;
  Binding beta;
};

struct Outcome {
  NodePtr node;
  std::optional<Failure> fail;
};

VarSet vars_of(const std::vector<Event>& ev) {
  VarSet out;
  for (const auto& e : ev) out.insert(e.resp.var);
  return out;
}

Conjunction to_conj(const std::vector<Event>& ev) {
  Conjunction c;
  for (const auto& e : ev) c.add(e);
  return c;
}

Conjunction substitute(const Conjunction& c, int from, Val to) {
  auto swap = [&](Val v) { return v.is_index() && v.index() == from ? to : v; };
  Conjunction out;
  for (const auto& e : c.events) {
    Event x;
    x.resp.var = e.resp.var;
    for (const auto& [k, t] : e.resp.sub) x.resp.set(k, swap(t.val));
    x.value = swap(e.value);
    out.add(x);
  }
  return out;
}

class Engine {
 public:
  Engine(const CausalDiagram& g, IdResult& res) : g_(g), res_(res), est_(res.estimand) {
    rank_.assign(g.size(), 0);
    auto order = topological_order(g);
    for (std::size_t i = 0; i < order.size(); ++i) rank_[order[i]] = static_cast<int>(i);
  }

  void log(const std::string& s) { est_.log.push_back(s); }

  std::string show(const Conjunction& c) const { return render(c, g_, &est_.indices); }

  std::string show_template(int regime, const std::vector<Event>& ev) const {
    IndexPool p = est_.regimes[regime].pool();
    return render(to_conj(ev), g_, &p);
  }

  void add_regime(RegimeTemplate t) {
    est_.regimes.push_back(std::move(t));
    const auto& tt = est_.regimes.back();
    std::vector<std::vector<Event>> blocks;
    for (const auto& b : ctf_factorize(tt.factor, g_)) blocks.push_back(b.events);
    tblocks_.push_back(blocks);
    IndexPool p = tt.pool();
    log("regime " + std::to_string(est_.regimes.size() - 1) + " [" + render_regime(tt.spec, g_) +
        "]: template " + render(tt.events, g_, &p) + "; factor form " + render(tt.factor, g_, &p));
  }

  std::vector<Event> sorted_by_rank(std::vector<Event> ev) const {
    std::stable_sort(ev.begin(), ev.end(), [&](const Event& a, const Event& b) {
      return rank_[a.resp.var] < rank_[b.resp.var];
    });
    return ev;
  }

  // ---- identify+ over symbolic template events

  int fresh_for(int regime, const Event& e) {
    if (!e.value.is_index())
      throw ExprError("cannot marginalize " + render(e.resp, g_) + ": its value is fixed");
    return est_.indices.fresh(g_, est_.regimes[regime].syms.at(e.value.index()).var);
  }

  NodePtr input_ref(int regime, const VarSet& kept, const Binding& b) const {
    InputRef in;
    in.regime = regime;
    in.kept = kept;
    in.binding.assign(est_.regimes[regime].syms.size(), Val::of(0));
    // Unused symbols stay at 0 so equal marginals compare equal.
    for (int s : relevant_syms(est_.regimes[regime], kept))
      if (auto it = b.find(s); it != b.end()) in.binding[s] = it->second;
    return make_input(in);
  }

  Builder base_builder(int regime, const std::vector<Event>& block) {
    std::vector<VarId> tv;
    for (const auto& e : est_.regimes[regime].factor.events) tv.push_back(e.resp.var);
    return [this, regime, block, tv](const Binding& b) {
      std::vector<NodePtr> fs;
      for (const auto& e : block) {
        VarSet le, lt;
        for (VarId v : tv) {
          if (rank_[v] <= rank_[e.resp.var]) le.insert(v);
          if (rank_[v] < rank_[e.resp.var]) lt.insert(v);
        }
        NodePtr den = lt.empty() ? make_const(1.0) : input_ref(regime, lt, b);
        fs.push_back(make_quotient(input_ref(regime, le, b), den));
      }
      return make_product(fs);
    };
  }

  // Marginal of Q[H] over the events of H ranked after `cut` (inclusive or not).
  NodePtr prefix(int regime, const std::vector<Event>& H, VarId cut, bool inclusive,
                 const Binding& b, const Builder& buildH) {
    std::vector<int> idx;
    Binding bb = b;
    bool any_kept = false;
    for (const auto& e : H) {
      bool keep = inclusive ? rank_[e.resp.var] <= rank_[cut] : rank_[e.resp.var] < rank_[cut];
      if (keep) {
        any_kept = true;
        continue;
      }
      int i = fresh_for(regime, e);
      bb[e.value.index()] = Val::idx(i);
      idx.push_back(i);
    }
    if (!any_kept) return make_const(1.0);
    return make_sum(idx, buildH(bb));
  }

  Outcome idplus(int regime, const std::vector<Event>& T, const Builder& build,
                 const std::vector<Event>& C, const Binding& beta, int depth) {
    std::string pad(2 * depth, ' ');
    VarSet cv = vars_of(C), hv = cv;
    std::map<VarId, VarId> child_of;
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& e : T) {
        if (hv.count(e.resp.var)) continue;
        for (const auto& h : T) {
          if (!hv.count(h.resp.var)) continue;
          auto it = h.resp.sub.find(e.resp.var);
          if (it != h.resp.sub.end() && it->second.val == e.value) {
            hv.insert(e.resp.var);
            child_of[e.resp.var] = h.resp.var;
            changed = true;
            break;
          }
        }
      }
    }
    std::vector<Event> H;
    for (const auto& e : T)
      if (hv.count(e.resp.var)) H.push_back(e);
    log(pad + "identify+ target " + show_template(regime, C) + " in " + show_template(regime, T) +
        ": closure " + show_template(regime, H));

    if (hv == cv) {
      Binding bb = beta;
      std::vector<int> idx;
      for (const auto& e : T) {
        if (cv.count(e.resp.var)) continue;
        int i = fresh_for(regime, e);
        bb[e.value.index()] = Val::idx(i);
        idx.push_back(i);
      }
      log(pad + "  closure equals target: marginalize the remaining events");
      return {make_sum(idx, build(bb)), std::nullopt};
    }
    if (hv == vars_of(T)) {
      log(pad + "  closure equals input: hedge found");
      return {nullptr, Failure{regime, T, C, child_of, beta}};
    }

    Builder buildH = [this, regime, T, hv, build](const Binding& b) {
      Binding bb = b;
      std::vector<int> idx;
      for (const auto& e : T) {
        if (hv.count(e.resp.var)) continue;
        int i = fresh_for(regime, e);
        bb[e.value.index()] = Val::idx(i);
        idx.push_back(i);
      }
      return make_sum(idx, build(bb));
    };

    VarSet hi;
    for (const auto& blk : c_components_within(g_, hv))
      if (blk.count(*cv.begin())) hi = blk;
    if (!is_subset(cv, hi)) throw ExprError("target is not inside one c-component of its closure");
    std::vector<Event> Hi;
    for (const auto& e : H)
      if (hi.count(e.resp.var)) Hi.push_back(e);
    log(pad + "  marginalize to the closure, then split off block " + show_template(regime, Hi));

    Builder buildHi = [this, regime, H, Hi, buildH](const Binding& b) {
      std::vector<NodePtr> fs;
      for (const auto& e : Hi) {
        NodePtr num = prefix(regime, H, e.resp.var, true, b, buildH);
        NodePtr den = prefix(regime, H, e.resp.var, false, b, buildH);
        fs.push_back(make_quotient(num, den));
      }
      return make_product(fs);
    };
    return idplus(regime, Hi, buildHi, C, beta, depth + 1);
  }

  // ---- query side

  // Removes trivially true events and resolves repeated responses. Returns
  // false when the conjunction is impossible.
  bool normalize(Conjunction& c, std::vector<std::vector<int>*> summable) {
    auto is_summable = [&](Val v) {
      if (!v.is_index()) return false;
      for (auto* lst : summable)
        if (std::find(lst->begin(), lst->end(), v.index()) != lst->end()) return true;
      return false;
    };
    // Replaces one of a, b by the other. Returns false if neither can move.
    auto unify = [&](Val a, Val b) {
      if (!is_summable(a)) std::swap(a, b);
      if (!is_summable(a)) return false;
      c = substitute(c, a.index(), b);
      for (auto* lst : summable) lst->erase(std::remove(lst->begin(), lst->end(), a.index()), lst->end());
      return true;
    };
    auto undecidable = [&](Val a, Val b) {
      throw ExprError("cannot decide whether " + render_val(a, &est_.indices) + " and " +
                      render_val(b, &est_.indices) + " are equal");
    };
    for (bool again = true; again;) {
      again = false;
      for (std::size_t i = 0; i < c.events.size() && !again; ++i) {
        const Event e = c.events[i];
        auto it = e.resp.sub.find(e.resp.var);
        if (it == e.resp.sub.end()) continue;
        Val a = it->second.val, b = e.value;
        if (a == b) {
          c.events.erase(c.events.begin() + static_cast<long>(i));
        } else if (!a.is_index() && !b.is_index()) {
          return false;
        } else if (!unify(a, b)) {
          undecidable(a, b);
        }
        again = true;
      }
      for (std::size_t i = 0; i < c.events.size() && !again; ++i) {
        for (std::size_t j = i + 1; j < c.events.size() && !again; ++j) {
          if (!(c.events[i].resp == c.events[j].resp)) continue;
          Val a = c.events[i].value, b = c.events[j].value;
          if (!a.is_index() && !b.is_index()) return false;
          if (!unify(a, b)) undecidable(a, b);
          again = true;
        }
      }
    }
    return true;
  }

  bool unify(const Event& te, const Event& qe, Binding& beta) const {
    auto bind = [&](Val t, Val q) {
      if (!t.is_index()) return t == q;
      auto [it, fresh] = beta.emplace(t.index(), q);
      return fresh || it->second == q;
    };
    if (te.resp.keys() != qe.resp.keys()) return false;
    for (const auto& [k, term] : te.resp.sub)
      if (!bind(term.val, qe.resp.at(k))) return false;
    return bind(te.value, qe.value);
  }

  Hedge make_hedge(const Failure& f) {
    Binding b = f.beta;
    const auto& syms = est_.regimes[f.regime].syms;
    auto inst = [&](Val v) {
      if (!v.is_index()) return v;
      auto it = b.find(v.index());
      if (it != b.end()) return it->second;
      Val fresh = Val::idx(est_.indices.fresh(g_, syms.at(v.index()).var));
      b[v.index()] = fresh;
      return fresh;
    };
    auto inst_event = [&](const Event& e) {
      Event x;
      x.resp.var = e.resp.var;
      for (const auto& [k, t] : e.resp.sub) x.resp.set(k, inst(t.val));
      x.value = inst(e.value);
      return x;
    };
    Hedge h;
    for (const auto& e : f.T) h.T.add(inst_event(e));
    for (const auto& e : f.C) h.C.add(inst_event(e));
    for (VarId v = 0; v < g_.size(); ++v) h.subgraph.add_variable(g_.name(v), g_.card(v));
    for (auto [from, to] : f.child_of) h.subgraph.add_edge(from, to);
    VarSet tv = vars_of(f.T);
    VarSet seen{*tv.begin()};
    std::queue<VarId> q;
    q.push(*tv.begin());
    while (!q.empty()) {
      VarId v = q.front();
      q.pop();
      for (VarId s : g_.spouses_of(v)) {
        if (!tv.count(s) || seen.count(s)) continue;
        seen.insert(s);
        h.subgraph.add_bidirected(v, s);
        q.push(s);
      }
    }
    return h;
  }

  NodePtr solve_block(const Conjunction& blk, bool& ok) {
    ok = false;
    std::optional<Failure> first;
    VarSet bv = blk.vars();
    if (bv.size() != blk.size()) {
      log("block " + show(blk) + " holds two responses of one variable; no input can match it");
      res_.fail = {blk, -1, std::nullopt, "block holds two responses of one variable"};
      return nullptr;
    }
    for (int r = 0; r < static_cast<int>(est_.regimes.size()); ++r) {
      for (const auto& ti : tblocks_[r]) {
        if (!is_subset(bv, vars_of(ti))) continue;
        Binding beta;
        std::vector<Event> C;
        bool good = true;
        for (const auto& e : sorted_by_rank(blk.events)) {
          for (const auto& te : ti)
            if (te.resp.var == e.resp.var) {
              good = good && unify(te, e, beta);
              C.push_back(te);
            }
        }
        if (!good) {
          log("block " + show(blk) + " vs regime " + std::to_string(r) + ": values clash");
          continue;
        }
        log("block " + show(blk) + " vs regime " + std::to_string(r) + " block " +
            show_template(r, ti));
        Outcome o = idplus(r, ti, base_builder(r, ti), C, beta, 1);
        if (o.node) {
          ok = true;
          return o.node;
        }
        if (!first) first = o.fail;
      }
    }
    res_.fail.block = blk;
    if (first) {
      res_.fail.regime = first->regime;
      res_.fail.hedge = make_hedge(*first);
      res_.fail.reason = "hedge between the block and regime " + std::to_string(first->regime);
    } else {
      res_.fail.reason = "no regime measures every variable of the block together";
    }
    log("block " + show(blk) + " is not identifiable: " + res_.fail.reason);
    return nullptr;
  }

  // Identifies an un-nested conjunction; returns nullptr on FAIL.
  NodePtr factor_query(const Conjunction& in, std::vector<int>& outer) {
    Conjunction c = exclusion_set(in, g_);
    log("exclusion: " + show(c));
    std::vector<int> anc;
    if (!normalize(c, {&outer})) {
      log("conflicting values: probability 0");
      return make_const(0.0);
    }
    Conjunction w = c;
    for (const auto& a : ctf_ancestors(c, g_)) {
      bool present = std::any_of(w.events.begin(), w.events.end(),
                                 [&](const Event& e) { return e.resp == a; });
      if (present) continue;
      int i = est_.indices.fresh(g_, a.var);
      anc.push_back(i);
      w.add(Event{a, Val::idx(i)});
    }
    log("ancestors: " + show(w));
    Conjunction f = ancestral_set_transform(w, g_);
    if (!normalize(f, {&outer, &anc})) {
      log("factor form " + show(f) + " is inconsistent: probability 0");
      return make_const(0.0);
    }
    log("factor form: " + show(f));
    std::vector<NodePtr> parts;
    for (const auto& blk : ctf_factorize(f, g_)) {
      res_.blocks.push_back(blk);
      log("query block: " + show(blk));
    }
    for (const auto& blk : ctf_factorize(f, g_)) {
      bool ok = false;
      NodePtr n = solve_block(blk, ok);
      if (!ok) return nullptr;
      parts.push_back(n);
    }
    return make_sum(anc, make_product(parts));
  }

  NodePtr joint(const Conjunction& q) {
    Unnested u = unnest(q, g_, est_.indices);
    log("un-nested: " + show(u.conj));
    std::vector<int> outer = u.indices;
    NodePtr body = factor_query(u.conj, outer);
    if (!body) return nullptr;
    return make_sum(outer, body);
  }

  // ---- single-input entry point

  NodePtr single(const Conjunction& target, const Conjunction& input) {
    const auto& t = est_.regimes[0];
    std::vector<Event> T = sorted_by_rank(t.factor.events);
    Binding beta;
    std::vector<Event> C;
    for (const auto& e : sorted_by_rank(target.events)) {
      const Event* te = nullptr;
      for (const auto& x : T)
        if (x.resp.var == e.resp.var) te = &x;
      if (!te || !unify(*te, e, beta))
        throw ExprError("target event " + render(e, g_, &est_.indices) + " is not in the input");
      C.push_back(*te);
    }
    (void)input;
    Outcome o = idplus(0, T, base_builder(0, T), C, beta, 0);
    if (o.node) return o.node;
    res_.fail.block = target;
    res_.fail.regime = 0;
    res_.fail.hedge = make_hedge(*o.fail);
    res_.fail.reason = "hedge between target and input";
    return nullptr;
  }

 private:
  const CausalDiagram& g_;
  IdResult& res_;
  Estimand& est_;
  std::vector<int> rank_;
  std::vector<std::vector<std::vector<Event>>> tblocks_;
};

}  // namespace

IdResult identify_plus(const CausalDiagram& g, const Conjunction& target, const Conjunction& input,
                       const IndexPool& symbols) {
  if (!input.flat() || !target.flat()) throw ExprError("identify+ needs un-nested factors");
  if (!is_ctf_factor(input, g)) throw ExprError("input is not a ctf-factor");
  VarSet iv = input.vars();
  if (iv.size() != input.size()) throw ExprError("input repeats a variable");
  if (c_components_within(g, iv).size() != 1) throw ExprError("input spans several c-components");
  for (const auto& e : target.events)
    if (!iv.count(e.resp.var)) throw ExprError("target variable outside the input");

  IdResult res;
  res.estimand.graph = g;
  res.estimand.indices = symbols;
  // The input acts as a regime whose symbols are the caller's indices.
  RegimeTemplate t;
  for (int i = 0; i < symbols.size(); ++i)
    t.syms.push_back({symbols.at(i).var, -1, symbols.at(i).name});
  t.events = input;
  t.factor = input;
  res.estimand.regimes.push_back(t);
  Engine eng(g, res);
  NodePtr root = eng.single(target, input);
  res.identified = root != nullptr;
  res.estimand.root = root;
  return res;
}

IdResult ctfidu_plus(const CausalDiagram& g, const Query& q, const std::vector<RegimeSpec>& regimes,
                     const IndexPool& pool) {
  IdResult res;
  res.estimand.graph = g;
  res.estimand.indices = pool;
  Engine eng(g, res);
  eng.log("query: " + render(q, g, &pool));
  for (const auto& r : regimes) eng.add_regime(regime_regex(g, r));

  NodePtr root;
  if (q.given) {
    Conjunction all = q.joint;
    for (const auto& e : q.given->events) all.add(e);
    eng.log("numerator " + render(all, g, &pool));
    NodePtr num = eng.joint(all);
    if (!num) return res;
    eng.log("denominator " + render(*q.given, g, &pool));
    NodePtr den = eng.joint(*q.given);
    if (!den) return res;
    if (den->kind == Node::Kind::Const && den->value == 0.0)
      throw ExprError("conditioning event is impossible");
    root = make_quotient(num, den);
  } else {
    root = eng.joint(q.joint);
    if (!root) return res;
  }
  res.identified = true;
  res.estimand.root = root;
  eng.log("result: " + render_text(res.estimand));
  return res;
}

nlohmann::json certificate_json(const IdResult& r) {
  const auto& g = r.estimand.graph;
  const auto* pool = &r.estimand.indices;
  nlohmann::json j = {{"identified", false},
                      {"block", render(r.fail.block, g, pool)},
                      {"reason", r.fail.reason},
                      {"regime", r.fail.regime}};
  if (r.fail.regime >= 0 && r.fail.regime < static_cast<int>(r.estimand.regimes.size()))
    j["regime_actions"] = render_regime(r.estimand.regimes[r.fail.regime].spec, g);
  if (r.fail.hedge) {
    const auto& h = *r.fail.hedge;
    std::vector<std::string> dir, bi;
    for (auto [a, b] : h.subgraph.directed()) dir.push_back(g.name(a) + " -> " + g.name(b));
    for (auto [a, b] : h.subgraph.bidirected()) bi.push_back(g.name(a) + " <-> " + g.name(b));
    j["hedge"] = {{"T", render_events(h.T, g, pool)},
                  {"C", render_events(h.C, g, pool)},
                  {"directed", dir},
                  {"bidirected", bi},
                  {"valid", detect_ctf_hedge(h.T, h.C, h.subgraph)}};
  }
  j["log"] = r.estimand.log;
  return j;
}

std::string render_certificate(const IdResult& r) {
  const auto& g = r.estimand.graph;
  const auto* pool = &r.estimand.indices;
  std::string out = "FAIL: " + render(r.fail.block, g, pool) + " (" + r.fail.reason + ")\n";
  if (r.fail.hedge) {
    const auto& h = *r.fail.hedge;
    out += "  hedge T: " + render_events(h.T, g, pool) + "\n";
    out += "  roots C: " + render_events(h.C, g, pool) + "\n";
    out += "  edges:";
    for (auto [a, b] : h.subgraph.directed()) out += " " + g.name(a) + "->" + g.name(b);
    for (auto [a, b] : h.subgraph.bidirected()) out += " " + g.name(a) + "<->" + g.name(b);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- classic

namespace {

struct Dense {
  const CausalDiagram& g;
  std::vector<int> cards;
  std::size_t size = 1;

  explicit Dense(const CausalDiagram& gg) : g(gg) {
    for (VarId v = 0; v < g.size(); ++v) {
      cards.push_back(g.card(v));
      size *= g.card(v);
    }
  }

  std::vector<int> decode(std::size_t off) const {
    std::vector<int> a(cards.size());
    for (std::size_t i = cards.size(); i-- > 0;) {
      a[i] = static_cast<int>(off % cards[i]);
      off /= cards[i];
    }
    return a;
  }

  std::size_t encode(const std::vector<int>& a) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < cards.size(); ++i) off = off * cards[i] + a[i];
    return off;
  }

  // Sum over the variables in s, broadcast back over them.
  std::vector<double> sum_over(const std::vector<double>& t, const VarSet& s) const {
    std::map<std::size_t, double> acc;
    auto key = [&](std::size_t off) {
      auto a = decode(off);
      for (VarId v : s) a[v] = 0;
      return encode(a);
    };
    for (std::size_t off = 0; off < size; ++off) acc[key(off)] += t[off];
    std::vector<double> out(size);
    for (std::size_t off = 0; off < size; ++off) out[off] = acc[key(off)];
    return out;
  }
};

}  // namespace

ClassicResult classic_identify(const CausalDiagram& g, const VarSet& C, const VarSet& T,
                               const std::vector<double>& qT) {
  if (!is_subset(C, T)) throw ExprError("classic identify: C must be inside T");
  if (c_components_within(g, T).size() != 1) throw ExprError("classic identify: T is not one c-component");
  Dense d(g);
  if (qT.size() != d.size) throw ExprError("classic identify: table has the wrong size");
  auto order = topological_order(g);
  ClassicResult res;
  VarSet t = T;
  std::vector<double> q = qT;
  for (;;) {
    VarSet a = ancestors_within(g, t, C);
    res.trace += "T=" + g.names(t) + " An(C)=" + g.names(a) + "; ";
    if (a == C) {
      res.identified = true;
      res.table = d.sum_over(q, set_minus(t, C));
      return res;
    }
    if (a == t) {
      res.trace += "FAIL";
      return res;
    }
    std::vector<double> qa = d.sum_over(q, set_minus(t, a));
    VarSet next;
    for (const auto& blk : c_components_within(g, a))
      if (blk.count(*C.begin())) next = blk;
    std::vector<double> qn(d.size, 1.0);
    VarSet after = a;
    std::vector<double> below = d.sum_over(qa, a);
    for (VarId v : order) {
      if (!a.count(v)) continue;
      after.erase(v);
      std::vector<double> upto = d.sum_over(qa, after);
      if (next.count(v))
        for (std::size_t i = 0; i < d.size; ++i) qn[i] *= below[i] == 0.0 ? 0.0 : upto[i] / below[i];
      below = upto;
    }
    t = next;
    q = qn;
  }
}

}  // namespace ctfid
