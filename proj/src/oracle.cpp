#include "ctfid/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>

namespace ctfid {

std::uint64_t enumeration_cap() {
  if (const char* s = std::getenv("CTFID_CAP")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(s, &end, 10);
    if (end != s && v > 0) return v;
  }
  return std::uint64_t{1} << 24;
}

namespace {

// Mechanisms flattened for the inner enumeration loops.
class Compiled {
 public:
  explicit Compiled(const DiscreteSCM& m) : m_(m) {
    m.validate();
    auto g = induced_diagram(m);
    order_ = topological_order(g);
    upto_.resize(m.size());
    for (VarId v = 0; v < m.size(); ++v) {
      VarSet an = ancestors(g, {v});
      for (VarId w : order_)
        if (an.count(w)) upto_[v].push_back(w);
    }
  }

  int size() const { return m_.size(); }

  // fixed[v] >= 0 overrides the mechanism of v; forced holds per-edge values.
  void run(const std::vector<int>& u, const std::vector<int>& fixed, const EdgeIntervention* ei,
           std::vector<int>& out) const {
    out.assign(m_.size(), 0);
    eval(order_, u, fixed, ei, out);
  }

  // Computes only target and its ancestors; other entries of out are stale.
  int run_for(VarId target, const std::vector<int>& u, const std::vector<int>& fixed,
              std::vector<int>& out) const {
    out.resize(m_.size());
    eval(upto_[target], u, fixed, nullptr, out);
    return out[target];
  }

  std::uint64_t states() const { return m_.exogenous_states(); }

  // Decodes unit index k into u and returns its probability.
  double unit(std::uint64_t k, std::vector<int>& u) const {
    u.resize(m_.exo.size());
    double p = 1.0;
    for (std::size_t i = m_.exo.size(); i-- > 0;) {
      u[i] = static_cast<int>(k % m_.exo[i].card);
      k /= m_.exo[i].card;
      p *= m_.exo[i].p[u[i]];
    }
    return p;
  }

  const DiscreteSCM& model() const { return m_; }

 private:
  void eval(const std::vector<VarId>& vars, const std::vector<int>& u, const std::vector<int>& fixed,
            const EdgeIntervention* ei, std::vector<int>& out) const {
    for (VarId v : vars) {
      if (fixed[v] >= 0) {
        out[v] = fixed[v];
        continue;
      }
      const auto& mc = m_.mech[v];
      std::size_t off = 0;
      for (int e : mc.exo) off = off * m_.exo[e].card + u[e];
      for (VarId p : mc.parents) {
        int x = out[p];
        if (ei) {
          if (auto it = ei->find({p, v}); it != ei->end()) x = it->second;
        }
        off = off * m_.cards[p] + x;
      }
      out[v] = mc.table[off];
    }
  }

  const DiscreteSCM& m_;
  std::vector<VarId> order_;
  std::vector<std::vector<VarId>> upto_;  // ancestors of v in topological order
};

void check_cap(const Compiled& c) {
  std::uint64_t n = c.states(), cap = enumeration_cap();
  if (n > cap)
    throw ScmError("exogenous space has " + std::to_string(n) + " states, above the cap of " +
                   std::to_string(cap) + " (set CTFID_CAP or use Monte Carlo)");
}

// Fixed chunking keeps the reduction order independent of the thread count.
constexpr std::uint64_t kChunks = 64;

struct Span {
  std::uint64_t lo, hi;
};

std::vector<Span> chunks(std::uint64_t n) {
  std::vector<Span> out;
  std::uint64_t step = std::max<std::uint64_t>(1, (n + kChunks - 1) / kChunks);
  for (std::uint64_t lo = 0; lo < n; lo += step) out.push_back({lo, std::min(n, lo + step)});
  return out;
}

// Validates w up front; nothing may throw inside the parallel loops.
void check_concrete(const DiscreteSCM& m, const Response& r) {
  if (r.var < 0 || r.var >= m.size()) throw ScmError("event on an unknown variable");
  for (const auto& [k, t] : r.sub) {
    if (k < 0 || k >= m.size()) throw ScmError("subscript on an unknown variable");
    if (t.is_nested()) {
      check_concrete(m, *t.nested);
    } else {
      if (t.val.is_index()) throw ScmError("cannot evaluate a symbolic subscript");
      if (t.val.value() >= m.cards[k]) throw ScmError("subscript value out of domain");
    }
  }
}

void check_concrete(const DiscreteSCM& m, const Conjunction& w) {
  for (const auto& e : w.events) {
    check_concrete(m, e.resp);
    if (e.value.is_index()) throw ScmError("cannot evaluate a symbolic value");
  }
}

int resolve(const Compiled& c, const std::vector<int>& u, const Response& r,
            std::vector<int>& scratch) {
  std::vector<int> fixed(c.size(), -1);
  for (const auto& [k, t] : r.sub) {
    if (t.is_nested()) {
      fixed[k] = resolve(c, u, *t.nested, scratch);
    } else {
      if (t.val.is_index()) throw ScmError("cannot evaluate a symbolic subscript");
      fixed[k] = t.val.value();
    }
  }
  return c.run_for(r.var, u, fixed, scratch);
}

bool holds(const Compiled& c, const std::vector<int>& u, const Conjunction& w,
           std::vector<int>& scratch) {
  for (const auto& e : w.events) {
    if (e.value.is_index()) throw ScmError("cannot evaluate a symbolic value");
    if (resolve(c, u, e.resp, scratch) != e.value.value()) return false;
  }
  return true;
}

}  // namespace

double l3_valuation_serial(const DiscreteSCM& m, const Conjunction& w) {
  Compiled c(m);
  check_cap(c);
  check_concrete(m, w);
  std::vector<int> u, scratch;
  double total = 0.0;
  for (std::uint64_t k = 0; k < c.states(); ++k) {
    double p = c.unit(k, u);
    if (holds(c, u, w, scratch)) total += p;
  }
  return total;
}

double l3_valuation(const DiscreteSCM& m, const Conjunction& w) {
  Compiled c(m);
  check_cap(c);
  check_concrete(m, w);
  auto spans = chunks(c.states());
  std::vector<double> part(spans.size(), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < spans.size(); ++i) {
    std::vector<int> u, scratch;
    double s = 0.0;
    for (std::uint64_t k = spans[i].lo; k < spans[i].hi; ++k) {
      double p = c.unit(k, u);
      if (holds(c, u, w, scratch)) s += p;
    }
    part[i] = s;
  }
  double total = 0.0;
  for (double x : part) total += x;
  return total;
}

double l3_query(const DiscreteSCM& m, const Query& q) {
  if (!q.given) return l3_valuation(m, q.joint);
  Conjunction all = q.joint;
  for (const auto& e : q.given->events) all.add(e);
  double den = l3_valuation(m, *q.given);
  if (den <= 0.0) throw ScmError("conditioning event has probability zero");
  return l3_valuation(m, all) / den;
}

Estimate l3_monte_carlo(const DiscreteSCM& m, const Query& q, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ScmError("Monte Carlo needs at least one draw");
  Compiled c(m);
  std::mt19937_64 rng(seed);
  std::vector<std::discrete_distribution<int>> draw;
  for (const auto& e : m.exo) draw.emplace_back(e.p.begin(), e.p.end());
  Conjunction all = q.joint;
  if (q.given)
    for (const auto& e : q.given->events) all.add(e);
  std::vector<int> u(m.exo.size()), scratch;
  std::size_t hit = 0, cond = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = 0; e < draw.size(); ++e) u[e] = draw[e](rng);
    bool given = !q.given || holds(c, u, *q.given, scratch);
    if (!given) continue;
    ++cond;
    if (holds(c, u, all, scratch)) ++hit;
  }
  if (cond == 0) throw ScmError("no draw satisfied the conditioning event");
  double p = static_cast<double>(hit) / cond;
  return {p, std::sqrt(p * (1.0 - p) / cond)};
}

// ---------------------------------------------------------------- symbolic tables

namespace {

// Either evaluates one event (event >= 0) or loops over the values of a
// symbol no event determines (event < 0, symbol in assign).
struct Step {
  int event;   // index into events, or -1 for a loop
  int assign;  // symbol set by this step, or -1 to check the event
};

struct Plan {
  std::vector<Step> steps;  // events are evaluated before the loops they do not need
  std::vector<int> cards;
  std::size_t size = 1;
};

Plan make_plan(const Conjunction& w, const std::vector<int>& cards, int nvars) {
  Plan plan;
  plan.cards = cards;
  for (int c : cards) plan.size *= c;
  std::vector<bool> known(cards.size(), false);
  auto sym_ok = [&](Val v) {
    if (!v.is_index()) return true;
    if (v.index() >= static_cast<int>(cards.size())) throw ScmError("symbol without a domain");
    return static_cast<bool>(known[v.index()]);
  };
  for (const auto& e : w.events) {
    if (!e.resp.flat()) throw ScmError("symbolic tables need un-nested events");
    if (e.resp.var < 0 || e.resp.var >= nvars) throw ScmError("event on an unknown variable");
    for (const auto& [k, t] : e.resp.sub)
      if (!t.val.is_index() && (k < 0 || k >= nvars)) throw ScmError("subscript on an unknown variable");
  }
  std::vector<bool> done(w.events.size(), false);
  std::size_t left = w.events.size();
  while (left) {
    bool progressed = false;
    for (std::size_t i = 0; i < w.events.size(); ++i) {
      if (done[i]) continue;
      const auto& e = w.events[i];
      bool ready = std::all_of(e.resp.sub.begin(), e.resp.sub.end(),
                               [&](const auto& kv) { return sym_ok(kv.second.val); });
      if (!ready) continue;
      int assign = -1;
      if (e.value.is_index() && !sym_ok(e.value)) {
        assign = e.value.index();
        known[assign] = true;
      }
      plan.steps.push_back({static_cast<int>(i), assign});
      done[i] = true;
      --left;
      progressed = true;
    }
    if (progressed) continue;
    // Every remaining event waits on an unknown subscript: loop over one.
    for (std::size_t i = 0; i < w.events.size() && !progressed; ++i) {
      if (done[i]) continue;
      for (const auto& [k, t] : w.events[i].resp.sub)
        if (t.val.is_index() && !known[t.val.index()]) {
          known[t.val.index()] = true;
          plan.steps.push_back({-1, t.val.index()});
          progressed = true;
          break;
        }
    }
  }
  // Symbols that no event mentions still index the table.
  for (std::size_t s = 0; s < cards.size(); ++s)
    if (!known[s]) plan.steps.push_back({-1, static_cast<int>(s)});
  return plan;
}

// Adds P(u) to every table cell consistent with unit u.
void accumulate_from(const Compiled& c, const Conjunction& w, const Plan& plan, std::size_t at,
                     const std::vector<int>& u, double p, std::vector<double>& table,
                     std::vector<int>& sym, std::vector<int>& scratch, std::vector<int>& fixed) {
  for (; at < plan.steps.size(); ++at) {
    const auto& st = plan.steps[at];
    if (st.event < 0) {
      for (int v = 0; v < plan.cards[st.assign]; ++v) {
        sym[st.assign] = v;
        accumulate_from(c, w, plan, at + 1, u, p, table, sym, scratch, fixed);
      }
      return;
    }
    const auto& e = w.events[st.event];
    std::fill(fixed.begin(), fixed.end(), -1);
    for (const auto& [k, t] : e.resp.sub) fixed[k] = t.val.is_index() ? sym[t.val.index()] : t.val.value();
    int got = c.run_for(e.resp.var, u, fixed, scratch);
    if (st.assign >= 0) {
      if (got >= plan.cards[st.assign]) return;
      sym[st.assign] = got;
    } else if (got != (e.value.is_index() ? sym[e.value.index()] : e.value.value())) {
      return;
    }
  }
  std::size_t off = 0;
  for (std::size_t s = 0; s < plan.cards.size(); ++s) off = off * plan.cards[s] + sym[s];
  table[off] += p;
}

void accumulate_unit(const Compiled& c, const Conjunction& w, const Plan& plan,
                     const std::vector<int>& u, double p, std::vector<double>& table,
                     std::vector<int>& sym, std::vector<int>& scratch, std::vector<int>& fixed) {
  accumulate_from(c, w, plan, 0, u, p, table, sym, scratch, fixed);
}

}  // namespace

std::vector<double> symbolic_table_serial(const DiscreteSCM& m, const Conjunction& w,
                                          const std::vector<int>& cards) {
  Compiled c(m);
  check_cap(c);
  Plan plan = make_plan(w, cards, m.size());
  std::vector<double> table(plan.size, 0.0);
  std::vector<int> u, sym(cards.size(), 0), scratch, fixed(m.size(), -1);
  for (std::uint64_t k = 0; k < c.states(); ++k) {
    double p = c.unit(k, u);
    accumulate_unit(c, w, plan, u, p, table, sym, scratch, fixed);
  }
  return table;
}

std::vector<double> symbolic_table(const DiscreteSCM& m, const Conjunction& w,
                                   const std::vector<int>& cards) {
  Compiled c(m);
  check_cap(c);
  Plan plan = make_plan(w, cards, m.size());
  auto spans = chunks(c.states());
  std::vector<std::vector<double>> part(spans.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < spans.size(); ++i) {
    std::vector<double> local(plan.size, 0.0);
    std::vector<int> u, sym(cards.size(), 0), scratch, fixed(m.size(), -1);
    for (std::uint64_t k = spans[i].lo; k < spans[i].hi; ++k) {
      double p = c.unit(k, u);
      accumulate_unit(c, w, plan, u, p, local, sym, scratch, fixed);
    }
    part[i] = std::move(local);
  }
  std::vector<double> table(plan.size, 0.0);
  for (const auto& local : part)
    for (std::size_t j = 0; j < table.size(); ++j) table[j] += local[j];
  return table;
}

// ---------------------------------------------------------------- regimes

RegimeTable regime_distribution(const DiscreteSCM& m, const RegimeSpec& a) {
  CausalDiagram g = induced_diagram(m);
  RegimeTemplate t = regime_regex(g, a);
  RegimeTable out;
  out.cards = t.cards(g);
  out.p = symbolic_table(m, t.events, out.cards);
  return out;
}

namespace {

struct RegimeRun {
  std::vector<int> fixed;
  EdgeIntervention ei;
};

RegimeRun regime_settings(const RegimeTemplate& t, const std::vector<int>& sym, int nvars) {
  RegimeRun r{std::vector<int>(nvars, -1), {}};
  for (std::size_t i = 0; i < t.spec.actions.size(); ++i) {
    const auto& act = t.spec.actions[i];
    int s = -1;
    for (int k : t.action_syms)
      if (t.syms[k].action == static_cast<int>(i)) s = k;
    if (act.kind == Action::Kind::Rand)
      r.fixed[act.source] = sym[s];
    else
      for (VarId c : act.targets) r.ei[{act.source, c}] = sym[s];
  }
  return r;
}

}  // namespace

RegimeTable regime_distribution_direct(const DiscreteSCM& m, const RegimeSpec& a) {
  Compiled c(m);
  check_cap(c);
  CausalDiagram g = induced_diagram(m);
  RegimeTemplate t = regime_regex(g, a);
  RegimeTable out;
  out.cards = t.cards(g);
  std::size_t size = 1;
  for (int k : out.cards) size *= k;
  out.p.assign(size, 0.0);
  std::vector<int> sym(t.syms.size(), 0), u, vals;
  std::vector<int> loop(t.action_syms.size(), 0);
  for (;;) {
    for (std::size_t i = 0; i < loop.size(); ++i) sym[t.action_syms[i]] = loop[i];
    RegimeRun run = regime_settings(t, sym, m.size());
    for (std::uint64_t k = 0; k < c.states(); ++k) {
      double p = c.unit(k, u);
      c.run(u, run.fixed, &run.ei, vals);
      for (std::size_t s = 0; s < t.syms.size(); ++s)
        if (t.syms[s].action < 0) sym[s] = vals[t.syms[s].var];
      out.p[out.offset(sym)] += p;
    }
    std::size_t i = loop.size();
    while (i > 0) {
      --i;
      if (++loop[i] < out.cards[t.action_syms[i]]) break;
      loop[i] = 0;
      if (i == 0) return out;
    }
    if (loop.empty()) return out;
  }
}

Dataset sample_regime(const DiscreteSCM& m, const RegimeSpec& a, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ScmError("sample size must be at least 1");
  Compiled c(m);
  CausalDiagram g = induced_diagram(m);
  RegimeTemplate t = regime_regex(g, a);
  Dataset d;
  for (const auto& s : t.syms) d.columns.push_back(s.name);
  std::mt19937_64 rng(seed);
  std::vector<std::discrete_distribution<int>> draw;
  for (const auto& e : m.exo) draw.emplace_back(e.p.begin(), e.p.end());
  std::vector<int> u(m.exo.size()), vals, sym(t.syms.size(), 0);
  for (std::size_t r = 0; r < n; ++r) {
    for (int s : t.action_syms) {
      std::uniform_int_distribution<int> pick(0, g.card(t.syms[s].var) - 1);
      sym[s] = pick(rng);
    }
    for (std::size_t e = 0; e < draw.size(); ++e) u[e] = draw[e](rng);
    RegimeRun run = regime_settings(t, sym, m.size());
    c.run(u, run.fixed, &run.ei, vals);
    for (std::size_t s = 0; s < t.syms.size(); ++s)
      if (t.syms[s].action < 0) sym[s] = vals[t.syms[s].var];
    d.rows.push_back(sym);
  }
  return d;
}

std::string dataset_csv(const Dataset& d) {
  std::ostringstream out;
  for (std::size_t i = 0; i < d.columns.size(); ++i) out << (i ? "," : "") << d.columns[i];
  out << "\n";
  for (const auto& row : d.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  return out.str();
}

}  // namespace ctfid
