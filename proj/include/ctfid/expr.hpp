#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctfid/graph.hpp"

namespace ctfid {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg + " at position " + std::to_string(pos)), pos_(pos) {}
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

class ExprError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value slot: either a concrete value 0..card-1 or a symbolic index that is
// bound by a summation (or left free in a hedge description).
class Val {
 public:
  constexpr Val() = default;
  static constexpr Val of(int v) { return Val(v); }
  static constexpr Val idx(int id) { return Val(-id - 1); }
  bool is_index() const { return code_ < 0; }
  int value() const { return code_; }
  int index() const { return -code_ - 1; }
  int code() const { return code_; }
  auto operator<=>(const Val&) const = default;

 private:
  constexpr explicit Val(int code) : code_(code) {}
  int code_ = 0;
};

struct IndexInfo {
  std::string name;
  VarId var;
};

// Names and domains of symbolic indices. Shared by queries, estimands and
// certificates so that they render consistently.
class IndexPool {
 public:
  int add(const std::string& name, VarId var);
  // Fresh deterministic name: lowercase variable name followed by a counter.
  int fresh(const CausalDiagram& g, VarId var);
  std::optional<int> find(const std::string& name) const;
  const IndexInfo& at(int id) const { return info_.at(id); }
  int size() const { return static_cast<int>(info_.size()); }

 private:
  std::vector<IndexInfo> info_;
  std::map<std::string, int> counters_;
};

struct Response;

struct Term {
  Val val;
  std::shared_ptr<const Response> nested;
  bool is_nested() const { return nested != nullptr; }
};

struct Response {
  VarId var = -1;
  std::map<VarId, Term> sub;

  bool flat() const;
  VarSet keys() const;
  // Only valid on flat responses.
  Val at(VarId v) const;
  void set(VarId v, Val x) { sub[v] = Term{x, nullptr}; }
};

int compare(const Term& a, const Term& b);
int compare(const Response& a, const Response& b);
inline bool operator==(const Response& a, const Response& b) { return compare(a, b) == 0; }
inline bool operator<(const Response& a, const Response& b) { return compare(a, b) < 0; }

struct Event {
  Response resp;
  Val value;
};

int compare(const Event& a, const Event& b);
inline bool operator==(const Event& a, const Event& b) { return compare(a, b) == 0; }
inline bool operator<(const Event& a, const Event& b) { return compare(a, b) < 0; }

// Joint counterfactual event. Duplicates are dropped on insertion; equality
// is set equality.
struct Conjunction {
  std::vector<Event> events;

  void add(const Event& e);
  bool contains(const Event& e) const;
  bool empty() const { return events.empty(); }
  std::size_t size() const { return events.size(); }
  VarSet vars() const;
  bool flat() const;
  std::vector<Event> sorted() const;
  bool operator==(const Conjunction& o) const { return sorted() == o.sorted(); }
};

struct Query {
  Conjunction joint;
  std::optional<Conjunction> given;
  bool operator==(const Query& o) const { return joint == o.joint && given == o.given; }
};

// DSL. In plain mode symbolic values such as x, x', x'' mean 0, 1, 2 (the
// number of primes). With a pool, identifiers become named indices instead.
Query parse_query(const std::string& text, const CausalDiagram& g, IndexPool* symbols = nullptr);
Conjunction parse_conjunction(const std::string& text, const CausalDiagram& g,
                              IndexPool* symbols = nullptr);

std::string render_val(Val v, const IndexPool* pool);
std::string render(const Response& r, const CausalDiagram& g, const IndexPool* pool = nullptr);
std::string render(const Event& e, const CausalDiagram& g, const IndexPool* pool = nullptr);
std::string render_events(const Conjunction& c, const CausalDiagram& g,
                          const IndexPool* pool = nullptr);
std::string render(const Conjunction& c, const CausalDiagram& g, const IndexPool* pool = nullptr);
std::string render(const Query& q, const CausalDiagram& g, const IndexPool* pool = nullptr);

struct Unnested {
  Conjunction conj;
  std::vector<int> indices;  // summation indices, outermost first
};

// Repeated counterfactual unnesting. Identical inner responses share one
// summation index.
Unnested unnest(const Conjunction& q, const CausalDiagram& g, IndexPool& pool);

Response exclusion(const Response& r, const CausalDiagram& g);
Conjunction exclusion_set(const Conjunction& c, const CausalDiagram& g);

std::vector<Response> ctf_ancestors(const Conjunction& c, const CausalDiagram& g);
std::vector<Response> ctf_ancestors(const Response& r, const CausalDiagram& g);

// Finds the event whose response is the counterfactual parent of `child`
// for parent p (p outside the child's subscript). Returns nullptr if absent.
const Event* ctf_parent_event(const Conjunction& c, const Response& child, VarId p,
                              const CausalDiagram& g);

Conjunction ancestral_set_transform(const Conjunction& c, const CausalDiagram& g);
bool is_ctf_factor(const Conjunction& c, const CausalDiagram& g);

// Blocks follow the c-components of the subgraph induced by the variables of
// the factor; events inside a block keep topological order.
std::vector<Conjunction> ctf_factorize(const Conjunction& f, const CausalDiagram& g);

bool is_consistent(const Conjunction& f);

struct CFactor {
  VarSet block;
  std::map<VarId, Val> values;  // assembled from event values and subscripts
};
CFactor collapse(const Conjunction& f);

bool trivial_conflict(const Conjunction& c);

}  // namespace ctfid
