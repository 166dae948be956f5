#include "ctfid/estimand.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace ctfid {

NodePtr make_const(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Const;
  n->value = v;
  return n;
}

NodePtr make_input(InputRef in) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Input;
  n->input = std::move(in);
  return n;
}

namespace {

bool is_const(const NodePtr& n, double v) { return n->kind == Node::Kind::Const && n->value == v; }

}  // namespace

NodePtr make_sum(std::vector<int> bound, NodePtr child) {
  if (bound.empty()) return child;
  if (is_const(child, 0.0)) return child;
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Sum;
  n->bound = std::move(bound);
  n->kids = {std::move(child)};
  return n;
}

NodePtr make_product(std::vector<NodePtr> kids) {
  std::vector<NodePtr> kept;
  for (auto& k : kids) {
    if (is_const(k, 1.0)) continue;
    if (is_const(k, 0.0)) return k;
    if (k->kind == Node::Kind::Product) {
      kept.insert(kept.end(), k->kids.begin(), k->kids.end());
      continue;
    }
    kept.push_back(k);
  }
  if (kept.empty()) return make_const(1.0);
  if (kept.size() == 1) return kept.front();
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Product;
  n->kids = std::move(kept);
  return n;
}

NodePtr make_quotient(NodePtr num, NodePtr den) {
  if (is_const(den, 1.0) || is_const(num, 0.0)) return num;
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Quotient;
  n->kids = {std::move(num), std::move(den)};
  return n;
}

std::size_t RegimeTable::offset(const std::vector<int>& a) const {
  std::size_t off = 0;
  for (std::size_t i = 0; i < cards.size(); ++i) off = off * cards[i] + a[i];
  return off;
}

// ---------------------------------------------------------------- helpers

std::vector<int> relevant_syms(const RegimeTemplate& t, const VarSet& kept) {
  std::set<int> s;
  for (const auto& e : t.events.events) {
    if (!kept.count(e.resp.var)) continue;
    if (e.value.is_index()) s.insert(e.value.index());
    for (const auto& [k, term] : e.resp.sub)
      if (term.val.is_index()) s.insert(term.val.index());
  }
  return {s.begin(), s.end()};
}

namespace {

Val bound_value(const InputRef& in, Val v) {
  if (!v.is_index()) return v;
  return in.binding.at(v.index());
}

}  // namespace

Conjunction input_events(const Estimand& e, const InputRef& in) {
  const auto& t = e.regimes.at(in.regime);
  Conjunction out;
  for (const auto& ev : t.events.events) {
    if (!in.kept.count(ev.resp.var)) continue;
    Event x;
    x.resp.var = ev.resp.var;
    for (const auto& [k, term] : ev.resp.sub) x.resp.set(k, bound_value(in, term.val));
    x.value = bound_value(in, ev.value);
    out.add(x);
  }
  return out;
}

// ---------------------------------------------------------------- text

namespace {

bool conditional_pair(const Estimand& e, const NodePtr& num, const NodePtr& den) {
  if (num->kind != Node::Kind::Input || den->kind != Node::Kind::Input) return false;
  const auto &a = num->input, &b = den->input;
  if (a.regime != b.regime || !is_subset(b.kept, a.kept) || a.kept == b.kept) return false;
  for (int s : relevant_syms(e.regimes.at(b.regime), b.kept))
    if (a.binding.at(s) != b.binding.at(s)) return false;
  return true;
}

std::string render_rec(const Estimand& e, const NodePtr& n, bool tail) {
  switch (n->kind) {
    case Node::Kind::Const: {
      if (n->value == 0.0) return "0";
      if (n->value == 1.0) return "1";
      return std::to_string(n->value);
    }
    case Node::Kind::Input:
      return render(input_events(e, n->input), e.graph, &e.indices);
    case Node::Kind::Quotient: {
      const auto &num = n->kids[0], &den = n->kids[1];
      if (conditional_pair(e, num, den)) {
        Conjunction j = input_events(e, num->input), k = input_events(e, den->input);
        Conjunction only;
        for (const auto& ev : j.events)
          if (!k.contains(ev)) only.add(ev);
        return "P(" + render_events(only, e.graph, &e.indices) + " | " +
               render_events(k, e.graph, &e.indices) + ")";
      }
      return "[" + render_rec(e, num, true) + "] / [" + render_rec(e, den, true) + "]";
    }
    case Node::Kind::Sum: {
      std::string names;
      for (int i : n->bound) {
        if (!names.empty()) names += ",";
        names += e.indices.at(i).name;
      }
      std::string body = "Σ_{" + names + "} " + render_rec(e, n->kids[0], true);
      return tail ? body : "[" + body + "]";
    }
    case Node::Kind::Product: {
      std::string out;
      for (std::size_t i = 0; i < n->kids.size(); ++i) {
        if (i) out += " ";
        out += render_rec(e, n->kids[i], tail && i + 1 == n->kids.size());
      }
      return out;
    }
  }
  return "";
}

}  // namespace

std::string render_node(const Estimand& e, const NodePtr& n) { return render_rec(e, n, true); }

std::string render_text(const Estimand& e) { return render_node(e, e.root); }

// ---------------------------------------------------------------- json

namespace {

nlohmann::json node_json(const Estimand& e, const NodePtr& n) {
  using nlohmann::json;
  switch (n->kind) {
    case Node::Kind::Const:
      return {{"kind", "const"}, {"value", n->value}};
    case Node::Kind::Input: {
      const auto& t = e.regimes.at(n->input.regime);
      json binding = json::object();
      for (int s : relevant_syms(t, n->input.kept))
        binding[t.syms[s].name] = render_val(n->input.binding[s], &e.indices);
      std::vector<std::string> kept;
      for (VarId v : n->input.kept) kept.push_back(e.graph.name(v));
      return {{"kind", "input"},
              {"regime", n->input.regime},
              {"kept", kept},
              {"binding", binding},
              {"events", render_events(input_events(e, n->input), e.graph, &e.indices)}};
    }
    case Node::Kind::Sum: {
      std::vector<std::string> names;
      for (int i : n->bound) names.push_back(e.indices.at(i).name);
      return {{"kind", "sum"}, {"bound", names}, {"child", node_json(e, n->kids[0])}};
    }
    case Node::Kind::Product: {
      json kids = json::array();
      for (const auto& k : n->kids) kids.push_back(node_json(e, k));
      return {{"kind", "product"}, {"children", kids}};
    }
    case Node::Kind::Quotient:
      return {{"kind", "quotient"},
              {"num", node_json(e, n->kids[0])},
              {"den", node_json(e, n->kids[1])}};
  }
  return {};
}

}  // namespace

nlohmann::json to_json(const Estimand& e) {
  nlohmann::json regimes = nlohmann::json::array();
  for (const auto& t : e.regimes) {
    IndexPool p = t.pool();
    regimes.push_back({{"actions", render_regime(t.spec, e.graph)},
                       {"template", render(t.events, e.graph, &p)}});
  }
  return {{"text", render_text(e)},
          {"root", node_json(e, e.root)},
          {"regimes", regimes},
          {"log", e.log}};
}

// ---------------------------------------------------------------- evaluation

namespace {

struct Factor {
  std::vector<int> vars;  // sorted index ids
  std::vector<int> cards;
  std::vector<double> data;

  static Factor scalar(double v) { return {{}, {}, {v}}; }
};

// Odometer over the joint domain of `vars`, reporting each assignment.
void for_each_assignment(const std::vector<int>& cards,
                         const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> a(cards.size(), 0);
  for (;;) {
    fn(a);
    std::size_t i = cards.size();
    while (i > 0) {
      --i;
      if (++a[i] < cards[i]) break;
      a[i] = 0;
      if (i == 0) return;
    }
    if (cards.empty()) return;
  }
}

std::size_t project(const Factor& f, const std::vector<int>& vars, const std::vector<int>& a) {
  std::size_t off = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < f.vars.size(); ++i) {
    while (vars[j] != f.vars[i]) ++j;
    off = off * f.cards[i] + a[j];
  }
  return off;
}

Factor combine(const Factor& x, const Factor& y, const std::function<double(double, double)>& op) {
  Factor out;
  std::map<int, int> card;
  for (std::size_t i = 0; i < x.vars.size(); ++i) card[x.vars[i]] = x.cards[i];
  for (std::size_t i = 0; i < y.vars.size(); ++i) card[y.vars[i]] = y.cards[i];
  for (auto [v, c] : card) {
    out.vars.push_back(v);
    out.cards.push_back(c);
  }
  for_each_assignment(out.cards, [&](const std::vector<int>& a) {
    out.data.push_back(op(x.data[project(x, out.vars, a)], y.data[project(y, out.vars, a)]));
  });
  return out;
}

Factor sum_out(const Factor& f, int var) {
  auto it = std::find(f.vars.begin(), f.vars.end(), var);
  std::size_t pos = it - f.vars.begin();
  Factor out;
  for (std::size_t i = 0; i < f.vars.size(); ++i) {
    if (i == pos) continue;
    out.vars.push_back(f.vars[i]);
    out.cards.push_back(f.cards[i]);
  }
  out.data.assign(std::accumulate(out.cards.begin(), out.cards.end(), std::size_t{1},
                                  [](std::size_t a, int c) { return a * c; }),
                  0.0);
  std::size_t k = 0;
  for_each_assignment(f.cards, [&](const std::vector<int>& a) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (i != pos) off = off * f.cards[i] + a[i];
    out.data[off] += f.data[k++];
  });
  return out;
}

class Evaluator {
 public:
  Evaluator(const Estimand& e, const std::vector<RegimeTable>& tables) : e_(e), tables_(tables) {}

  Factor eval(const NodePtr& n) {
    switch (n->kind) {
      case Node::Kind::Const:
        return Factor::scalar(n->value);
      case Node::Kind::Input:
        return input(n->input);
      case Node::Kind::Sum: {
        Factor f = eval(n->kids[0]);
        for (int b : n->bound) {
          if (std::find(f.vars.begin(), f.vars.end(), b) != f.vars.end()) {
            f = sum_out(f, b);
          } else {
            double c = e_.graph.card(e_.indices.at(b).var);
            for (auto& x : f.data) x *= c;
          }
        }
        return f;
      }
      case Node::Kind::Product: {
        Factor f = Factor::scalar(1.0);
        for (const auto& k : n->kids) f = combine(f, eval(k), std::multiplies<>());
        return f;
      }
      case Node::Kind::Quotient: {
        Factor num = eval(n->kids[0]), den = eval(n->kids[1]);
        return combine(num, den, [](double a, double b) {
          if (b == 0.0) {
            if (a == 0.0) return 0.0;
            throw EstimandError("zero denominator");
          }
          return a / b;
        });
      }
    }
    throw EstimandError("bad node");
  }

 private:
  const std::vector<double>& marginal(int regime, const VarSet& kept) {
    auto key = std::make_pair(regime, kept);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    if (regime < 0 || regime >= static_cast<int>(tables_.size()))
      throw EstimandError("missing table for regime " + std::to_string(regime));
    const auto& t = e_.regimes.at(regime);
    const auto& table = tables_[regime];
    if (table.cards != t.cards(e_.graph))
      throw EstimandError("table shape does not match regime " + std::to_string(regime));
    std::vector<bool> drop(t.syms.size(), false);
    for (std::size_t s = 0; s < t.syms.size(); ++s)
      drop[s] = t.syms[s].action < 0 && !kept.count(t.syms[s].var);
    std::vector<double> m(table.p.size(), 0.0);
    std::size_t k = 0;
    for_each_assignment(table.cards, [&](const std::vector<int>& a) {
      std::vector<int> c = a;
      for (std::size_t s = 0; s < c.size(); ++s)
        if (drop[s]) c[s] = 0;
      m[table.offset(c)] += table.p[k++];
    });
    return cache_.emplace(key, std::move(m)).first->second;
  }

  Factor input(const InputRef& in) {
    const auto& t = e_.regimes.at(in.regime);
    const auto& m = marginal(in.regime, in.kept);
    const auto& table = tables_[in.regime];
    auto rel = relevant_syms(t, in.kept);
    Factor f;
    std::set<int> free;
    for (int s : rel)
      if (in.binding[s].is_index()) free.insert(in.binding[s].index());
    for (int i : free) {
      f.vars.push_back(i);
      f.cards.push_back(e_.graph.card(e_.indices.at(i).var));
    }
    std::vector<int> sym_val(t.syms.size(), 0);
    for_each_assignment(f.cards, [&](const std::vector<int>& a) {
      for (int s : rel) {
        Val v = in.binding[s];
        if (v.is_index()) {
          auto pos = std::find(f.vars.begin(), f.vars.end(), v.index()) - f.vars.begin();
          sym_val[s] = a[pos];
        } else {
          sym_val[s] = v.value();
        }
        if (sym_val[s] >= table.cards[s]) throw EstimandError("binding outside domain");
      }
      f.data.push_back(m[table.offset(sym_val)]);
    });
    return f;
  }

  const Estimand& e_;
  const std::vector<RegimeTable>& tables_;
  std::map<std::pair<int, VarSet>, std::vector<double>> cache_;
};

}  // namespace

double evaluate_estimand(const Estimand& e, const std::vector<RegimeTable>& tables) {
  Evaluator ev(e, tables);
  Factor f = ev.eval(e.root);
  if (!f.vars.empty()) throw EstimandError("estimand has free indices");
  return f.data.at(0);
}

// ---------------------------------------------------------------- structure

namespace {

using IndexMap = std::map<int, int>;

bool same_val(Val a, Val b, const IndexMap& m) {
  if (a.is_index() != b.is_index()) return false;
  if (!a.is_index()) return a == b;
  auto it = m.find(a.index());
  return it == m.end() ? a == b : it->second == b.index();
}

bool alpha_rec(const NodePtr& a, const NodePtr& b, IndexMap& m) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Node::Kind::Const:
      return a->value == b->value;
    case Node::Kind::Input: {
      const auto &x = a->input, &y = b->input;
      if (x.regime != y.regime || x.kept != y.kept || x.binding.size() != y.binding.size())
        return false;
      for (std::size_t s = 0; s < x.binding.size(); ++s)
        if (!same_val(x.binding[s], y.binding[s], m)) return false;
      return true;
    }
    case Node::Kind::Sum: {
      if (a->bound.size() != b->bound.size()) return false;
      std::vector<int> perm = b->bound;
      std::sort(perm.begin(), perm.end());
      do {
        IndexMap inner = m;
        for (std::size_t i = 0; i < perm.size(); ++i) inner[a->bound[i]] = perm[i];
        if (alpha_rec(a->kids[0], b->kids[0], inner)) return true;
      } while (std::next_permutation(perm.begin(), perm.end()));
      return false;
    }
    case Node::Kind::Product:
    case Node::Kind::Quotient: {
      if (a->kids.size() != b->kids.size()) return false;
      if (a->kind == Node::Kind::Quotient) {
        return alpha_rec(a->kids[0], b->kids[0], m) && alpha_rec(a->kids[1], b->kids[1], m);
      }
      // Products compare as multisets of factors.
      std::vector<bool> used(b->kids.size(), false);
      std::function<bool(std::size_t)> match = [&](std::size_t i) {
        if (i == a->kids.size()) return true;
        for (std::size_t j = 0; j < b->kids.size(); ++j) {
          if (used[j]) continue;
          IndexMap trial = m;
          if (!alpha_rec(a->kids[i], b->kids[j], trial)) continue;
          used[j] = true;
          if (match(i + 1)) return true;
          used[j] = false;
        }
        return false;
      };
      return match(0);
    }
  }
  return false;
}

void collect_free(const NodePtr& n, std::set<int> bound, std::set<int>& out) {
  switch (n->kind) {
    case Node::Kind::Const:
      return;
    case Node::Kind::Input:
      for (Val v : n->input.binding)
        if (v.is_index() && !bound.count(v.index())) out.insert(v.index());
      return;
    case Node::Kind::Sum:
      bound.insert(n->bound.begin(), n->bound.end());
      [[fallthrough]];
    default:
      for (const auto& k : n->kids) collect_free(k, bound, out);
  }
}

}  // namespace

bool alpha_equal(const NodePtr& a, const NodePtr& b) {
  IndexMap m;
  return alpha_rec(a, b, m);
}

std::set<int> free_indices(const NodePtr& n) {
  std::set<int> out;
  collect_free(n, {}, out);
  return out;
}

}  // namespace ctfid
