#include "ctfid/graph.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <queue>
#include <sstream>

namespace ctfid {

VarId CausalDiagram::add_variable(const std::string& name, int card) {
  if (name.empty()) throw GraphError("empty variable name");
  if (index_.count(name)) throw GraphError("duplicate variable '" + name + "'");
  if (card < 2) throw GraphError("variable '" + name + "' needs card >= 2");
  VarId v = size();
  names_.push_back(name);
  cards_.push_back(card);
  index_[name] = v;
  pa_.emplace_back();
  ch_.emplace_back();
  sp_.emplace_back();
  return v;
}

void CausalDiagram::check(VarId v) const {
  if (v < 0 || v >= size()) throw GraphError("unknown variable id " + std::to_string(v));
}

void CausalDiagram::add_edge(VarId from, VarId to) {
  check(from);
  check(to);
  if (from == to) throw GraphError("self-loop on '" + names_[from] + "'");
  if (has_edge(from, to)) return;
  if (ancestors(*this, {from}).count(to))
    throw GraphError("edge " + names_[from] + " -> " + names_[to] + " creates a cycle");
  directed_.insert({from, to});
  auto ins = [](std::vector<VarId>& vec, VarId x) {
    vec.insert(std::upper_bound(vec.begin(), vec.end(), x), x);
  };
  ins(pa_[to], from);
  ins(ch_[from], to);
}

void CausalDiagram::add_bidirected(VarId a, VarId b) {
  check(a);
  check(b);
  if (a == b) throw GraphError("bidirected self-loop on '" + names_[a] + "'");
  if (a > b) std::swap(a, b);
  if (!bidirected_.insert({a, b}).second) return;
  auto ins = [](std::vector<VarId>& vec, VarId x) {
    vec.insert(std::upper_bound(vec.begin(), vec.end(), x), x);
  };
  ins(sp_[a], b);
  ins(sp_[b], a);
}

const std::string& CausalDiagram::name(VarId v) const {
  check(v);
  return names_[v];
}

int CausalDiagram::card(VarId v) const {
  check(v);
  return cards_[v];
}

VarId CausalDiagram::id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw GraphError("unknown variable '" + name + "'");
  return it->second;
}

bool CausalDiagram::has_bidirected(VarId a, VarId b) const {
  if (a > b) std::swap(a, b);
  return bidirected_.count({a, b}) > 0;
}

const std::vector<VarId>& CausalDiagram::parents_of(VarId v) const {
  check(v);
  return pa_[v];
}
const std::vector<VarId>& CausalDiagram::children_of(VarId v) const {
  check(v);
  return ch_[v];
}
const std::vector<VarId>& CausalDiagram::spouses_of(VarId v) const {
  check(v);
  return sp_[v];
}

VarSet CausalDiagram::all() const {
  VarSet s;
  for (VarId v = 0; v < size(); ++v) s.insert(v);
  return s;
}

std::string CausalDiagram::names(const VarSet& s) const {
  std::string out = "{";
  bool first = true;
  for (VarId v : s) {
    if (!first) out += ", ";
    out += name(v);
    first = false;
  }
  return out + "}";
}

bool CausalDiagram::operator==(const CausalDiagram& o) const {
  return names_ == o.names_ && cards_ == o.cards_ && directed_ == o.directed_ &&
         bidirected_ == o.bidirected_;
}

VarSet parents(const CausalDiagram& g, VarId v) {
  const auto& p = g.parents_of(v);
  return VarSet(p.begin(), p.end());
}

VarSet children(const CausalDiagram& g, VarId v) {
  const auto& c = g.children_of(v);
  return VarSet(c.begin(), c.end());
}

namespace {

VarSet closure(const CausalDiagram& g, const VarSet& seed, bool up, const VarSet* within) {
  VarSet out;
  std::vector<VarId> stack;
  for (VarId v : seed) {
    g.name(v);
    if (out.insert(v).second) stack.push_back(v);
  }
  while (!stack.empty()) {
    VarId v = stack.back();
    stack.pop_back();
    for (VarId u : up ? g.parents_of(v) : g.children_of(v)) {
      if (within && !within->count(u)) continue;
      if (out.insert(u).second) stack.push_back(u);
    }
  }
  return out;
}

}  // namespace

VarSet ancestors(const CausalDiagram& g, const VarSet& s) { return closure(g, s, true, nullptr); }

VarSet descendants(const CausalDiagram& g, const VarSet& s) {
  return closure(g, s, false, nullptr);
}

VarSet ancestors_within(const CausalDiagram& g, const VarSet& w, const VarSet& s) {
  return closure(g, s, true, &w);
}

std::vector<VarSet> c_components_within(const CausalDiagram& g, const VarSet& w) {
  std::vector<VarSet> blocks;
  VarSet seen;
  for (VarId v : w) {
    if (seen.count(v)) continue;
    VarSet block;
    std::vector<VarId> stack{v};
    seen.insert(v);
    while (!stack.empty()) {
      VarId u = stack.back();
      stack.pop_back();
      block.insert(u);
      for (VarId s : g.spouses_of(u)) {
        if (w.count(s) && seen.insert(s).second) stack.push_back(s);
      }
    }
    blocks.push_back(block);
  }
  // w is iterated in id order, so blocks already come out ordered by their
  // smallest member.
  return blocks;
}

std::vector<VarSet> c_components(const CausalDiagram& g) { return c_components_within(g, g.all()); }

CausalDiagram induced_subgraph(const CausalDiagram& g, const VarSet& w) {
  CausalDiagram out;
  std::map<VarId, VarId> remap;
  for (VarId v : w) remap[v] = out.add_variable(g.name(v), g.card(v));
  for (auto [a, b] : g.directed())
    if (w.count(a) && w.count(b)) out.add_edge(remap[a], remap[b]);
  for (auto [a, b] : g.bidirected())
    if (w.count(a) && w.count(b)) out.add_bidirected(remap[a], remap[b]);
  return out;
}

CausalDiagram mutilate(const CausalDiagram& g, const VarSet& cut_into, const VarSet& cut_outof) {
  for (VarId v : cut_into) g.name(v);
  for (VarId v : cut_outof) g.name(v);
  CausalDiagram out;
  for (VarId v = 0; v < g.size(); ++v) out.add_variable(g.name(v), g.card(v));
  for (auto [a, b] : g.directed())
    if (!cut_into.count(b) && !cut_outof.count(a)) out.add_edge(a, b);
  for (auto [a, b] : g.bidirected())
    if (!cut_into.count(a) && !cut_into.count(b)) out.add_bidirected(a, b);
  return out;
}

std::vector<VarId> topological_order(const CausalDiagram& g) {
  std::vector<int> indeg(g.size(), 0);
  for (auto [a, b] : g.directed()) indeg[b]++;
  std::priority_queue<VarId, std::vector<VarId>, std::greater<>> ready;
  for (VarId v = 0; v < g.size(); ++v)
    if (indeg[v] == 0) ready.push(v);
  std::vector<VarId> order;
  while (!ready.empty()) {
    VarId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (VarId c : g.children_of(v))
      if (--indeg[c] == 0) ready.push(c);
  }
  if (static_cast<int>(order.size()) != g.size()) throw GraphError("cycle detected");
  return order;
}

bool bidirected_spanning_tree_check(const CausalDiagram& g, const VarSet& t) {
  if (t.empty()) return false;
  std::size_t edges = 0;
  for (auto [a, b] : g.bidirected())
    if (t.count(a) && t.count(b)) ++edges;
  if (edges + 1 != t.size()) return false;
  return c_components_within(g, t).size() == 1;
}

CausalDiagram parse_diagram(const std::string& text) {
  CausalDiagram g;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw GraphError("line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    try {
      if (tok[0] == "var") {
        if (tok.size() == 2) {
          g.add_variable(tok[1]);
        } else if (tok.size() == 4 && tok[2] == "card") {
          g.add_variable(tok[1], std::stoi(tok[3]));
        } else {
          fail("expected `var NAME card K`");
        }
      } else if (tok[0] == "edge" && tok.size() == 4) {
        if (tok[2] == "->")
          g.add_edge(g.id(tok[1]), g.id(tok[3]));
        else if (tok[2] == "<->")
          g.add_bidirected(g.id(tok[1]), g.id(tok[3]));
        else
          fail("unknown edge kind '" + tok[2] + "'");
      } else {
        fail("cannot parse '" + line + "'");
      }
    } catch (const std::invalid_argument&) {
      fail("bad cardinality");
    } catch (const GraphError& e) {
      if (std::string(e.what()).rfind("line ", 0) == 0) throw;
      fail(e.what());
    }
  }
  return g;
}

CausalDiagram load_diagram(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw GraphError("cannot open graph file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_diagram(ss.str());
}

std::string render_diagram(const CausalDiagram& g) {
  std::ostringstream out;
  for (VarId v = 0; v < g.size(); ++v) out << "var " << g.name(v) << " card " << g.card(v) << "\n";
  for (auto [a, b] : g.directed()) out << "edge " << g.name(a) << " -> " << g.name(b) << "\n";
  for (auto [a, b] : g.bidirected()) out << "edge " << g.name(a) << " <-> " << g.name(b) << "\n";
  return out.str();
}

VarSet set_union(const VarSet& a, const VarSet& b) {
  VarSet out = a;
  out.insert(b.begin(), b.end());
  return out;
}

VarSet set_minus(const VarSet& a, const VarSet& b) {
  VarSet out;
  for (VarId v : a)
    if (!b.count(v)) out.insert(v);
  return out;
}

VarSet set_intersect(const VarSet& a, const VarSet& b) {
  VarSet out;
  for (VarId v : a)
    if (b.count(v)) out.insert(v);
  return out;
}

bool is_subset(const VarSet& a, const VarSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace ctfid
