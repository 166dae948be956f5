#pragma once

#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "ctfid/regime.hpp"

namespace ctfid {

class EstimandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reference to a marginal of one regime table. Events of the template whose
// variables are in `kept` stay; the rest are summed out. binding[s] gives the
// value of template symbol s (constant or estimand index).
struct InputRef {
  int regime = 0;
  VarSet kept;
  std::vector<Val> binding;
};

// Template symbols whose binding matters when only `kept` events stay.
std::vector<int> relevant_syms(const RegimeTemplate& t, const VarSet& kept);

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  enum class Kind { Const, Input, Sum, Product, Quotient };
  Kind kind = Kind::Const;
  double value = 0.0;
  InputRef input;
  std::vector<int> bound;      // Sum only
  std::vector<NodePtr> kids;   // Sum: 1, Product: n, Quotient: 2
};

NodePtr make_const(double v);
NodePtr make_input(InputRef in);
NodePtr make_sum(std::vector<int> bound, NodePtr child);  // no-op for empty bound
NodePtr make_product(std::vector<NodePtr> kids);          // drops unit factors
NodePtr make_quotient(NodePtr num, NodePtr den);          // x / 1 -> x

// Dense table over all symbols of a regime template, row-major in symbol
// order (first symbol slowest).
struct RegimeTable {
  std::vector<int> cards;
  std::vector<double> p;
  std::size_t offset(const std::vector<int>& assignment) const;
};

struct Estimand {
  CausalDiagram graph;
  NodePtr root;
  IndexPool indices;
  std::vector<RegimeTemplate> regimes;
  std::vector<std::string> log;
};

std::string render_text(const Estimand& e);
std::string render_node(const Estimand& e, const NodePtr& n);
nlohmann::json to_json(const Estimand& e);

// Events referenced by an input node, with bindings substituted.
Conjunction input_events(const Estimand& e, const InputRef& in);

double evaluate_estimand(const Estimand& e, const std::vector<RegimeTable>& tables);

// Structural equality up to renaming of summation indices. Free indices must
// match exactly.
bool alpha_equal(const NodePtr& a, const NodePtr& b);

// Indices that occur in n without being bound by an enclosing sum inside n.
std::set<int> free_indices(const NodePtr& n);

}  // namespace ctfid
