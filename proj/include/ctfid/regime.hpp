#pragma once

#include <string>
#include <vector>

#include "ctfid/expr.hpp"

namespace ctfid {

struct Action {
  enum class Kind { Rand, CtfRand };
  Kind kind = Kind::Rand;
  VarId source = -1;
  VarSet targets;  // affected children; all children for Rand
};

// An input distribution is indexed by the actions performed while sampling.
// No actions means plain observation.
struct RegimeSpec {
  std::vector<Action> actions;
};

// Checks the actions against g, fills Rand targets, drops edges already
// claimed by an earlier action and drops actions left without edges.
RegimeSpec normalize_regime(const RegimeSpec& a, const CausalDiagram& g);

RegimeSpec parse_regime(const std::string& line, const CausalDiagram& g);
// One regime per non-empty line; actions inside a line are separated by ';'.
std::vector<RegimeSpec> parse_regimes(const std::string& text, const CausalDiagram& g);
std::vector<RegimeSpec> load_regimes(const std::string& path, const CausalDiagram& g);
std::string render_regime(const RegimeSpec& a, const CausalDiagram& g);

struct TemplateSymbol {
  VarId var;      // domain of the symbol
  int action;     // index into spec.actions, or -1 for a measured value
  std::string name;
};

// The un-nested counterfactual conjunction describing what one regime
// measures. Values and subscripts are symbolic: Val::idx(s) refers to
// syms[s]. A symbol shared between an event value and another event's
// subscript means the table only contains rows where they agree.
struct RegimeTemplate {
  RegimeSpec spec;
  std::vector<TemplateSymbol> syms;
  Conjunction events;  // minimal subscripts, declaration order
  Conjunction factor;  // same events re-subscripted by full parent sets
  std::vector<int> action_syms;

  IndexPool pool() const;
  int value_sym(VarId v) const;  // -1 when v is not measured
  std::vector<int> cards(const CausalDiagram& g) const;
};

RegimeTemplate regime_regex(const CausalDiagram& g, const RegimeSpec& a);

}  // namespace ctfid
