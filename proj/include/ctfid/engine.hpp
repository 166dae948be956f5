#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctfid/estimand.hpp"

namespace ctfid {

// A counterfactual hedge (or forest) as a concrete structure: the event set
// T, its root set C (a subset of T) and the subgraph over which the
// conditions are checked.
struct Hedge {
  Conjunction T;
  Conjunction C;
  CausalDiagram subgraph;
};

struct FailCertificate {
  Conjunction block;  // the query block that could not be identified
  int regime = -1;    // regime whose template produced the hedge, if any
  std::optional<Hedge> hedge;
  std::string reason;
};

struct IdResult {
  bool identified = false;
  Estimand estimand;              // graph, indices and log are always filled
  std::vector<Conjunction> blocks;  // query blocks after factorization
  FailCertificate fail;
};

bool detect_ctf_forest(const Conjunction& T, const Conjunction& C, const CausalDiagram& g);
bool detect_ctf_hedge(const Conjunction& T, const Conjunction& C, const CausalDiagram& g);

// Identifies the target ctf-factor from a single input ctf-factor. Indices of
// `symbols` used by the input stand for generic values; the input's estimand
// regime 0 is the input itself.
IdResult identify_plus(const CausalDiagram& g, const Conjunction& target, const Conjunction& input,
                       const IndexPool& symbols);

// `pool` must hold any indices the query refers to (symbolic queries).
IdResult ctfidu_plus(const CausalDiagram& g, const Query& q, const std::vector<RegimeSpec>& regimes,
                     const IndexPool& pool = IndexPool());

nlohmann::json certificate_json(const IdResult& r);
std::string render_certificate(const IdResult& r);

// Variable-level identification over one c-component. Tables are dense over
// all variables of g in id order (first variable slowest). qT holds Q[T](v).
struct ClassicResult {
  bool identified = false;
  std::vector<double> table;  // Q[C](v) when identified
  std::string trace;
};
ClassicResult classic_identify(const CausalDiagram& g, const VarSet& C, const VarSet& T,
                               const std::vector<double>& qT);

}  // namespace ctfid
