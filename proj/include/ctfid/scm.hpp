#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "ctfid/expr.hpp"

namespace ctfid {

class ScmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Exogenous {
  std::string name;
  int card = 2;
  std::vector<double> p;
};

// Lookup table indexed row-major by (exogenous parents..., endogenous
// parents...) in the listed order, first index slowest.
struct Mechanism {
  std::vector<int> exo;
  std::vector<VarId> parents;
  std::vector<int> table;
};

struct DiscreteSCM {
  std::vector<std::string> names;
  std::vector<int> cards;
  std::vector<Exogenous> exo;
  std::vector<Mechanism> mech;  // one per endogenous variable, same order

  int size() const { return static_cast<int>(names.size()); }
  VarId id(const std::string& name) const;
  // Throws ScmError describing the first violated invariant.
  void validate() const;
  std::uint64_t exogenous_states() const;  // saturates at UINT64_MAX
};

CausalDiagram induced_diagram(const DiscreteSCM& m);

nlohmann::json scm_to_json(const DiscreteSCM& m);
DiscreteSCM scm_from_json(const nlohmann::json& j);
DiscreteSCM load_scm(const std::string& path);
void save_scm(const DiscreteSCM& m, const std::string& path);

// Forced value seen by `child` in place of the natural value of `source`.
using EdgeIntervention = std::map<std::pair<VarId, VarId>, int>;

// Evaluates all endogenous variables for one exogenous assignment.
std::vector<int> eval_unit(const DiscreteSCM& m, const std::vector<int>& u,
                           const EdgeIntervention& ei = {}, const std::map<VarId, int>& fixed = {});

// Value of a (possibly nested) response for unit u; nested subscripts are
// resolved on the same unit.
int eval_response(const DiscreteSCM& m, const std::vector<int>& u, const Response& r);

// Random model whose induced diagram is g. Each variable has a private
// exogenous parent with card(V)+1 states and a mechanism that is onto for
// every setting of its other inputs, so every observable cell is positive.
DiscreteSCM random_scm(const CausalDiagram& g, std::uint64_t seed);

// Mixes every mechanism with a uniform draw: with probability eps the
// variable ignores its inputs. Adds one exogenous variable per endogenous one.
DiscreteSCM smooth_scm(const DiscreteSCM& m, double eps);

}  // namespace ctfid
