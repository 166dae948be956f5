#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ctfid {

using VarId = int;
using VarSet = std::set<VarId>;

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Acyclic directed mixed graph over discrete variables. Variable ids are
// assigned in declaration order and every ordering in the library breaks
// ties by that id.
class CausalDiagram {
 public:
  VarId add_variable(const std::string& name, int card = 2);
  void add_edge(VarId from, VarId to);
  void add_bidirected(VarId a, VarId b);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(VarId v) const;
  int card(VarId v) const;
  VarId id(const std::string& name) const;  // throws GraphError when unknown
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  bool has_edge(VarId from, VarId to) const { return directed_.count({from, to}) > 0; }
  bool has_bidirected(VarId a, VarId b) const;
  const std::set<std::pair<VarId, VarId>>& directed() const { return directed_; }
  const std::set<std::pair<VarId, VarId>>& bidirected() const { return bidirected_; }

  const std::vector<VarId>& parents_of(VarId v) const;
  const std::vector<VarId>& children_of(VarId v) const;
  const std::vector<VarId>& spouses_of(VarId v) const;

  VarSet all() const;
  std::string names(const VarSet& s) const;  // "{X, Y}"

  bool operator==(const CausalDiagram& o) const;

 private:
  void check(VarId v) const;

  std::vector<std::string> names_;
  std::vector<int> cards_;
  std::map<std::string, VarId> index_;
  std::set<std::pair<VarId, VarId>> directed_;
  std::set<std::pair<VarId, VarId>> bidirected_;  // stored with first < second
  std::vector<std::vector<VarId>> pa_, ch_, sp_;
};

VarSet parents(const CausalDiagram& g, VarId v);
VarSet children(const CausalDiagram& g, VarId v);
VarSet ancestors(const CausalDiagram& g, const VarSet& s);
VarSet descendants(const CausalDiagram& g, const VarSet& s);

// Ancestors of s inside the subgraph induced by w (s must be inside w).
VarSet ancestors_within(const CausalDiagram& g, const VarSet& w, const VarSet& s);

std::vector<VarSet> c_components(const CausalDiagram& g);
// c-components of the subgraph induced by w, expressed with g's ids.
std::vector<VarSet> c_components_within(const CausalDiagram& g, const VarSet& w);

// Vertex-induced subgraph. Variables are renumbered in declaration order;
// names and cardinalities are kept.
CausalDiagram induced_subgraph(const CausalDiagram& g, const VarSet& w);

// Removes directed edges into cut_into and out of cut_outof. Bidirected
// edges touching cut_into are removed as well.
CausalDiagram mutilate(const CausalDiagram& g, const VarSet& cut_into, const VarSet& cut_outof);

std::vector<VarId> topological_order(const CausalDiagram& g);

bool bidirected_spanning_tree_check(const CausalDiagram& g, const VarSet& t);

// Text format: `var X card 2`, `edge X -> Y`, `edge X <-> Y`, `#` comments.
CausalDiagram parse_diagram(const std::string& text);
CausalDiagram load_diagram(const std::string& path);
std::string render_diagram(const CausalDiagram& g);

VarSet set_union(const VarSet& a, const VarSet& b);
VarSet set_minus(const VarSet& a, const VarSet& b);
VarSet set_intersect(const VarSet& a, const VarSet& b);
bool is_subset(const VarSet& a, const VarSet& b);

}  // namespace ctfid
