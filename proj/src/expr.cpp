#include "ctfid/expr.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace ctfid {

// ---------------------------------------------------------------- indices

int IndexPool::add(const std::string& name, VarId var) {
  info_.push_back({name, var});
  return size() - 1;
}

int IndexPool::fresh(const CausalDiagram& g, VarId var) {
  std::string base = g.name(var);
  for (auto& ch : base) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  for (;;) {
    std::string name = base + std::to_string(counters_[base]++);
    if (!find(name)) return add(name, var);
  }
}

std::optional<int> IndexPool::find(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (info_[i].name == name) return i;
  return std::nullopt;
}

// ---------------------------------------------------------------- ordering

int compare(const Term& a, const Term& b) {
  if (a.is_nested() != b.is_nested()) return a.is_nested() ? 1 : -1;
  if (a.is_nested()) return compare(*a.nested, *b.nested);
  if (a.val == b.val) return 0;
  return a.val < b.val ? -1 : 1;
}

int compare(const Response& a, const Response& b) {
  if (a.var != b.var) return a.var < b.var ? -1 : 1;
  auto ia = a.sub.begin(), ib = b.sub.begin();
  for (; ia != a.sub.end() && ib != b.sub.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return ia->first < ib->first ? -1 : 1;
    if (int c = compare(ia->second, ib->second)) return c;
  }
  if (ia == a.sub.end() && ib == b.sub.end()) return 0;
  return ia == a.sub.end() ? -1 : 1;
}

int compare(const Event& a, const Event& b) {
  if (int c = compare(a.resp, b.resp)) return c;
  if (a.value == b.value) return 0;
  return a.value < b.value ? -1 : 1;
}

bool Response::flat() const {
  for (const auto& [k, t] : sub)
    if (t.is_nested()) return false;
  return true;
}

VarSet Response::keys() const {
  VarSet out;
  for (const auto& [k, t] : sub) out.insert(k);
  return out;
}

Val Response::at(VarId v) const {
  auto it = sub.find(v);
  if (it == sub.end() || it->second.is_nested()) throw ExprError("subscript entry missing or nested");
  return it->second.val;
}

void Conjunction::add(const Event& e) {
  if (!contains(e)) events.push_back(e);
}

bool Conjunction::contains(const Event& e) const {
  return std::any_of(events.begin(), events.end(), [&](const Event& x) { return x == e; });
}

VarSet Conjunction::vars() const {
  VarSet out;
  for (const auto& e : events) out.insert(e.resp.var);
  return out;
}

bool Conjunction::flat() const {
  return std::all_of(events.begin(), events.end(), [](const Event& e) { return e.resp.flat(); });
}

std::vector<Event> Conjunction::sorted() const {
  auto out = events;
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------- parsing

namespace {

struct Token {
  enum Kind { Ident, Int, Punct, End } kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (std::isalpha(c) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      while (j < s.size() && s[j] == '\'') ++j;
      out.push_back({Token::Ident, s.substr(i, j - i), i});
      i = j;
    } else if (std::isdigit(c)) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      out.push_back({Token::Int, s.substr(i, j - i), i});
      i = j;
    } else if (std::string("()[]=,|").find(static_cast<char>(c)) != std::string::npos) {
      out.push_back({Token::Punct, std::string(1, static_cast<char>(c)), i});
      ++i;
    } else {
      throw ParseError(std::string("unexpected character '") + static_cast<char>(c) + "'", i);
    }
  }
  out.push_back({Token::End, "", s.size()});
  return out;
}

class Parser {
 public:
  Parser(const std::string& text, const CausalDiagram& g, IndexPool* pool)
      : toks_(tokenize(text)), g_(g), pool_(pool) {}

  Query query() {
    Query q;
    const Token& p = next();
    if (p.kind != Token::Ident || p.text != "P") throw ParseError("expected 'P('", p.pos);
    expect("(");
    q.joint = conj();
    if (peek_punct("|")) {
      next();
      q.given = conj();
    }
    expect(")");
    end();
    return q;
  }

  Conjunction bare_conj() {
    Conjunction c = conj();
    end();
    return c;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }
  bool peek_punct(const char* p) const { return peek().kind == Token::Punct && peek().text == p; }
  void expect(const char* p) {
    const Token& t = next();
    if (t.kind != Token::Punct || t.text != p)
      throw ParseError(std::string("expected '") + p + "'", t.pos);
  }
  void end() {
    if (peek().kind != Token::End) throw ParseError("trailing input", peek().pos);
  }

  VarId variable(const Token& t) {
    if (t.kind != Token::Ident) throw ParseError("expected variable name", t.pos);
    if (!g_.has(t.text)) throw ParseError("unknown variable '" + t.text + "'", t.pos);
    return g_.id(t.text);
  }

  Val value(const Token& t, VarId var) {
    if (t.kind == Token::Int) {
      int v = std::stoi(t.text);
      if (v >= g_.card(var))
        throw ParseError("value " + t.text + " out of domain of " + g_.name(var), t.pos);
      return Val::of(v);
    }
    if (t.kind != Token::Ident) throw ParseError("expected value", t.pos);
    if (pool_) {
      if (auto id = pool_->find(t.text)) return Val::idx(*id);
      return Val::idx(pool_->add(t.text, var));
    }
    int primes = static_cast<int>(std::count(t.text.begin(), t.text.end(), '\''));
    if (primes >= g_.card(var))
      throw ParseError("symbol " + t.text + " exceeds domain of " + g_.name(var), t.pos);
    return Val::of(primes);
  }

  Response response(VarId var) {
    Response r;
    r.var = var;
    if (!peek_punct("[")) return r;
    next();
    for (;;) {
      const Token& kt = next();
      VarId key = variable(kt);
      if (r.sub.count(key)) throw ParseError("duplicate subscript " + kt.text, kt.pos);
      expect("=");
      const Token& vt = next();
      bool nested = vt.kind == Token::Ident &&
                    (toks_[i_].kind == Token::Punct && toks_[i_].text == "[" ? true
                                                                             : g_.has(vt.text));
      if (nested) {
        VarId inner = variable(vt);
        if (inner != key)
          throw ParseError("nested response for " + kt.text + " must be on the same variable",
                           vt.pos);
        r.sub[key] = Term{Val(), std::make_shared<Response>(response(inner))};
      } else {
        r.sub[key] = Term{value(vt, key), nullptr};
      }
      if (peek_punct(",")) {
        next();
        continue;
      }
      expect("]");
      return r;
    }
  }

  Conjunction conj() {
    Conjunction c;
    for (;;) {
      const Token& vt = next();
      VarId var = variable(vt);
      Event e;
      e.resp = response(var);
      expect("=");
      e.value = value(next(), var);
      c.add(e);
      if (!peek_punct(",")) return c;
      next();
    }
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  const CausalDiagram& g_;
  IndexPool* pool_;
};

}  // namespace

Query parse_query(const std::string& text, const CausalDiagram& g, IndexPool* symbols) {
  return Parser(text, g, symbols).query();
}

Conjunction parse_conjunction(const std::string& text, const CausalDiagram& g, IndexPool* symbols) {
  return Parser(text, g, symbols).bare_conj();
}

// ---------------------------------------------------------------- rendering

std::string render_val(Val v, const IndexPool* pool) {
  if (!v.is_index()) return std::to_string(v.value());
  if (pool && v.index() < pool->size()) return pool->at(v.index()).name;
  return "i" + std::to_string(v.index());
}

std::string render(const Response& r, const CausalDiagram& g, const IndexPool* pool) {
  std::string out = g.name(r.var);
  if (r.sub.empty()) return out;
  out += "[";
  bool first = true;
  for (const auto& [k, t] : r.sub) {
    if (!first) out += ", ";
    first = false;
    out += g.name(k) + "=";
    out += t.is_nested() ? render(*t.nested, g, pool) : render_val(t.val, pool);
  }
  return out + "]";
}

std::string render(const Event& e, const CausalDiagram& g, const IndexPool* pool) {
  return render(e.resp, g, pool) + "=" + render_val(e.value, pool);
}

std::string render_events(const Conjunction& c, const CausalDiagram& g, const IndexPool* pool) {
  std::string out;
  for (std::size_t i = 0; i < c.events.size(); ++i) {
    if (i) out += ", ";
    out += render(c.events[i], g, pool);
  }
  return out;
}

std::string render(const Conjunction& c, const CausalDiagram& g, const IndexPool* pool) {
  return "P(" + render_events(c, g, pool) + ")";
}

std::string render(const Query& q, const CausalDiagram& g, const IndexPool* pool) {
  std::string out = "P(" + render_events(q.joint, g, pool);
  if (q.given) out += " | " + render_events(*q.given, g, pool);
  return out + ")";
}

// ---------------------------------------------------------------- unnest

namespace {

struct Unnester {
  const CausalDiagram& g;
  IndexPool& pool;
  std::vector<std::pair<Response, int>> memo;
  Conjunction extra;
  std::vector<int> indices;

  Response flatten(const Response& r) {
    Response out;
    out.var = r.var;
    for (const auto& [k, t] : r.sub) {
      if (!t.is_nested()) {
        out.sub[k] = t;
        continue;
      }
      Response inner = flatten(*t.nested);
      int idx = -1;
      for (const auto& [resp, i] : memo)
        if (resp == inner) idx = i;
      if (idx < 0) {
        idx = pool.fresh(g, k);
        memo.emplace_back(inner, idx);
        indices.push_back(idx);
        extra.add(Event{inner, Val::idx(idx)});
      }
      out.set(k, Val::idx(idx));
    }
    return out;
  }
};

}  // namespace

Unnested unnest(const Conjunction& q, const CausalDiagram& g, IndexPool& pool) {
  Unnester u{g, pool, {}, {}, {}};
  Conjunction top;
  for (const auto& e : q.events) top.add(Event{u.flatten(e.resp), e.value});
  for (const auto& e : u.extra.events) top.add(e);
  return {top, u.indices};
}

// ---------------------------------------------------------------- rewrites

Response exclusion(const Response& r, const CausalDiagram& g) {
  if (!r.flat()) throw ExprError("exclusion needs an un-nested response");
  VarSet x = r.keys();
  VarSet an = ancestors(mutilate(g, x, {}), {r.var});
  Response out;
  out.var = r.var;
  for (const auto& [k, t] : r.sub)
    if (an.count(k)) out.sub[k] = t;
  return out;
}

Conjunction exclusion_set(const Conjunction& c, const CausalDiagram& g) {
  Conjunction out;
  for (const auto& e : c.events) out.add(Event{exclusion(e.resp, g), e.value});
  return out;
}

std::vector<Response> ctf_ancestors(const Response& r, const CausalDiagram& g) {
  if (!r.flat()) throw ExprError("ancestors need an un-nested response");
  VarSet x = r.keys();
  if (x.count(r.var)) return {r};
  CausalDiagram cut_out = mutilate(g, {}, x);
  CausalDiagram cut_in = mutilate(g, x, {});
  std::vector<Response> out;
  for (VarId w : ancestors(cut_out, {r.var})) {
    VarSet an_w = ancestors(cut_in, {w});
    Response a;
    a.var = w;
    for (const auto& [k, t] : r.sub)
      if (an_w.count(k)) a.sub[k] = t;
    out.push_back(a);
  }
  return out;
}

std::vector<Response> ctf_ancestors(const Conjunction& c, const CausalDiagram& g) {
  std::vector<Response> out;
  for (const auto& e : c.events)
    for (auto& a : ctf_ancestors(e.resp, g))
      if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  std::sort(out.begin(), out.end());
  return out;
}

const Event* ctf_parent_event(const Conjunction& c, const Response& child, VarId p,
                              const CausalDiagram& g) {
  VarSet an_p = ancestors(mutilate(g, child.keys(), {}), {p});
  Response want;
  want.var = p;
  for (const auto& [k, t] : child.sub)
    if (an_p.count(k)) want.sub[k] = t;
  for (const auto& e : c.events)
    if (e.resp == want) return &e;
  return nullptr;
}

Conjunction ancestral_set_transform(const Conjunction& c, const CausalDiagram& g) {
  if (!c.flat()) throw ExprError("AST needs an un-nested conjunction");
  for (const auto& a : ctf_ancestors(c, g)) {
    bool found = std::any_of(c.events.begin(), c.events.end(),
                             [&](const Event& e) { return e.resp == a; });
    if (!found) throw ExprError("input not ancestral: missing " + render(a, g));
  }
  Conjunction out;
  for (const auto& e : c.events) {
    Response r;
    r.var = e.resp.var;
    for (VarId p : g.parents_of(r.var)) {
      if (auto it = e.resp.sub.find(p); it != e.resp.sub.end()) {
        r.sub[p] = it->second;
      } else {
        const Event* pe = ctf_parent_event(c, e.resp, p, g);
        if (!pe) throw ExprError("input not ancestral: no parent event for " + render(e.resp, g));
        r.set(p, pe->value);
      }
    }
    out.add(Event{r, e.value});
  }
  return out;
}

bool is_ctf_factor(const Conjunction& c, const CausalDiagram& g) {
  for (const auto& e : c.events) {
    if (!e.resp.flat()) return false;
    if (e.resp.keys() != parents(g, e.resp.var)) return false;
  }
  return true;
}

std::vector<Conjunction> ctf_factorize(const Conjunction& f, const CausalDiagram& g) {
  std::vector<int> rank(g.size());
  auto order = topological_order(g);
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i);
  std::vector<Conjunction> blocks;
  for (const auto& block : c_components_within(g, f.vars())) {
    std::vector<Event> ev;
    for (const auto& e : f.events)
      if (block.count(e.resp.var)) ev.push_back(e);
    std::stable_sort(ev.begin(), ev.end(), [&](const Event& a, const Event& b) {
      return rank[a.resp.var] < rank[b.resp.var];
    });
    Conjunction c;
    for (auto& e : ev) c.add(e);
    blocks.push_back(c);
  }
  return blocks;
}

namespace {

std::map<VarId, std::set<Val>> assigned_values(const Conjunction& f) {
  std::map<VarId, std::set<Val>> seen;
  for (const auto& e : f.events) {
    seen[e.resp.var].insert(e.value);
    for (const auto& [k, t] : e.resp.sub) {
      if (t.is_nested()) throw ExprError("consistency check needs an un-nested factor");
      seen[k].insert(t.val);
    }
  }
  return seen;
}

}  // namespace

bool is_consistent(const Conjunction& f) {
  for (const auto& [v, vals] : assigned_values(f))
    if (vals.size() > 1) return false;
  return true;
}

CFactor collapse(const Conjunction& f) {
  if (!is_consistent(f)) throw ExprError("collapse on an inconsistent ctf-factor");
  CFactor out;
  out.block = f.vars();
  for (const auto& [v, vals] : assigned_values(f)) out.values[v] = *vals.begin();
  return out;
}

bool trivial_conflict(const Conjunction& c) {
  auto distinct = [](Val a, Val b) { return !a.is_index() && !b.is_index() && a != b; };
  for (std::size_t i = 0; i < c.events.size(); ++i) {
    const Event& e = c.events[i];
    if (auto it = e.resp.sub.find(e.resp.var); it != e.resp.sub.end() && !it->second.is_nested())
      if (distinct(it->second.val, e.value)) return true;
    for (std::size_t j = i + 1; j < c.events.size(); ++j)
      if (c.events[j].resp == e.resp && distinct(c.events[j].value, e.value)) return true;
  }
  return false;
}

}  // namespace ctfid
