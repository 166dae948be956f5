#include "ctfid/regime.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace ctfid {

RegimeSpec normalize_regime(const RegimeSpec& a, const CausalDiagram& g) {
  RegimeSpec out;
  std::set<std::pair<VarId, VarId>> claimed;
  VarSet rand_sources, ctf_sources;
  for (const auto& act : a.actions) {
    g.name(act.source);
    Action n = act;
    if (act.kind == Action::Kind::Rand) {
      if (rand_sources.count(act.source))
        throw ExprError("rand(" + g.name(act.source) + ") given twice");
      if (ctf_sources.count(act.source))
        throw ExprError("rand and ctf-rand both act on " + g.name(act.source));
      rand_sources.insert(act.source);
      n.targets = children(g, act.source);
    } else {
      if (rand_sources.count(act.source))
        throw ExprError("rand and ctf-rand both act on " + g.name(act.source));
      if (act.targets.empty())
        throw ExprError("ctf-rand(" + g.name(act.source) + ") has no targets");
      for (VarId c : act.targets)
        if (!g.has_edge(act.source, c))
          throw ExprError("ctf-rand target " + g.name(c) + " is not a child of " +
                          g.name(act.source));
      ctf_sources.insert(act.source);
      n.targets.clear();
      for (VarId c : act.targets)
        if (!claimed.count({act.source, c})) n.targets.insert(c);
      if (n.targets.empty()) continue;
    }
    for (VarId c : n.targets) claimed.insert({act.source, c});
    out.actions.push_back(n);
  }
  return out;
}

namespace {

std::string strip(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  return out;
}

Action parse_action(const std::string& raw, const CausalDiagram& g) {
  std::string s = strip(raw);
  auto inside = [&](const std::string& head) -> std::optional<std::string> {
    if (s.rfind(head + "(", 0) != 0 || s.back() != ')') return std::nullopt;
    return s.substr(head.size() + 1, s.size() - head.size() - 2);
  };
  if (auto body = inside("rand")) {
    if (!g.has(*body)) throw ExprError("rand: unknown variable '" + *body + "'");
    return Action{Action::Kind::Rand, g.id(*body), {}};
  }
  if (auto body = inside("ctf-rand")) {
    auto arrow = body->find("->");
    if (arrow == std::string::npos) throw ExprError("ctf-rand needs 'X -> {children}'");
    std::string src = body->substr(0, arrow);
    std::string rest = body->substr(arrow + 2);
    if (!rest.empty() && rest.front() == '{') {
      if (rest.back() != '}') throw ExprError("unbalanced braces in '" + raw + "'");
      rest = rest.substr(1, rest.size() - 2);
    }
    if (!g.has(src)) throw ExprError("ctf-rand: unknown variable '" + src + "'");
    Action act{Action::Kind::CtfRand, g.id(src), {}};
    std::stringstream ss(rest);
    for (std::string name; std::getline(ss, name, ',');) {
      if (!g.has(name)) throw ExprError("ctf-rand: unknown variable '" + name + "'");
      act.targets.insert(g.id(name));
    }
    return act;
  }
  throw ExprError("cannot parse action '" + raw + "'");
}

}  // namespace

RegimeSpec parse_regime(const std::string& line, const CausalDiagram& g) {
  RegimeSpec spec;
  std::stringstream ss(line);
  for (std::string part; std::getline(ss, part, ';');) {
    std::string s = strip(part);
    if (s.empty() || s == "observe") continue;
    spec.actions.push_back(parse_action(s, g));
  }
  return normalize_regime(spec, g);
}

std::vector<RegimeSpec> parse_regimes(const std::string& text, const CausalDiagram& g) {
  std::vector<RegimeSpec> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (strip(line).empty()) continue;
    try {
      out.push_back(parse_regime(line, g));
    } catch (const ExprError& e) {
      throw ExprError("regime line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RegimeSpec> load_regimes(const std::string& path, const CausalDiagram& g) {
  std::ifstream f(path);
  if (!f) throw ExprError("cannot open regime file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_regimes(ss.str(), g);
}

std::string render_regime(const RegimeSpec& a, const CausalDiagram& g) {
  if (a.actions.empty()) return "observe";
  std::string out;
  for (const auto& act : a.actions) {
    if (!out.empty()) out += "; ";
    if (act.kind == Action::Kind::Rand) {
      out += "rand(" + g.name(act.source) + ")";
    } else {
      out += "ctf-rand(" + g.name(act.source) + " -> {";
      bool first = true;
      for (VarId c : act.targets) {
        if (!first) out += ",";
        out += g.name(c);
        first = false;
      }
      out += "})";
    }
  }
  return out;
}

// ---------------------------------------------------------------- templates

IndexPool RegimeTemplate::pool() const {
  IndexPool p;
  for (const auto& s : syms) p.add(s.name, s.var);
  return p;
}

int RegimeTemplate::value_sym(VarId v) const {
  for (int s = 0; s < static_cast<int>(syms.size()); ++s)
    if (syms[s].var == v && syms[s].action < 0) return s;
  return -1;
}

std::vector<int> RegimeTemplate::cards(const CausalDiagram& g) const {
  std::vector<int> out;
  for (const auto& s : syms) out.push_back(g.card(s.var));
  return out;
}

RegimeTemplate regime_regex(const CausalDiagram& g, const RegimeSpec& a) {
  RegimeTemplate t;
  t.spec = normalize_regime(a, g);
  const auto& acts = t.spec.actions;
  auto order = topological_order(g);

  VarSet randomized;
  for (const auto& act : acts)
    if (act.kind == Action::Kind::Rand) randomized.insert(act.source);

  std::vector<int> action_sym(acts.size(), -1);
  std::vector<int> value_sym(g.size(), -1);
  for (VarId v : order) {
    std::string base = g.name(v);
    for (auto& ch : base) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    int primes = 0;
    auto next_name = [&] { return base + std::string(primes++, '\''); };
    for (std::size_t i = 0; i < acts.size(); ++i) {
      if (acts[i].source != v) continue;
      action_sym[i] = static_cast<int>(t.syms.size());
      t.action_syms.push_back(action_sym[i]);
      t.syms.push_back({v, static_cast<int>(i), next_name()});
    }
    if (!randomized.count(v)) {
      value_sym[v] = static_cast<int>(t.syms.size());
      t.syms.push_back({v, -1, next_name()});
    }
  }

  // Value C takes in this regime, as seen by its descendants.
  auto regime_value = [&](VarId c) {
    if (randomized.count(c)) {
      for (std::size_t i = 0; i < acts.size(); ++i)
        if (acts[i].source == c) return Val::idx(action_sym[i]);
    }
    return Val::idx(value_sym[c]);
  };

  auto build = [&](bool minimize) {
    Conjunction events;
    std::map<VarId, Response> shown;
    for (VarId v : order) {
      if (randomized.count(v)) continue;
      VarSet an = ancestors(g, {v});
      Response r;
      r.var = v;
      for (const auto& act : acts)
        for (VarId c : g.children_of(act.source))
          if (c != v && an.count(c)) r.set(c, regime_value(c));
      for (std::size_t i = 0; i < acts.size(); ++i)
        if (acts[i].targets.count(v)) r.set(acts[i].source, Val::idx(action_sym[i]));
      r = exclusion(r, g);

      // A pinned variable is redundant when, with the pin removed, it would
      // respond exactly as its own template event already does.
      std::vector<VarId> pins;
      for (VarId c : order)
        if (minimize && r.sub.count(c) && r.at(c) == regime_value(c) && shown.count(c)) pins.push_back(c);
      for (VarId c : pins) {
        Response without = r;
        without.sub.erase(c);
        Response natural = without;
        natural.var = c;
        natural = exclusion(natural, g);
        if (natural == shown.at(c)) r = exclusion(without, g);
      }
      shown[v] = r;
      events.add(Event{r, Val::idx(value_sym[v])});
    }
    return events;
  };

  // Dropping pins can leave a later event whose counterfactual ancestors are
  // no longer spelled out; the fully pinned form is used in that case.
  auto ancestral = [&](const Conjunction& c) {
    for (const auto& a : ctf_ancestors(c, g))
      if (std::none_of(c.events.begin(), c.events.end(), [&](const Event& e) { return e.resp == a; }))
        return false;
    return true;
  };
  t.events = build(true);
  if (!ancestral(t.events)) t.events = build(false);
  t.factor = ancestral_set_transform(t.events, g);
  return t;
}

}  // namespace ctfid
