#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ctfid/engine.hpp"
#include "ctfid/scm.hpp"

namespace ctfid::testing {

// Random acyclic diagram over n binary variables named V0, V1, ...; edges
// only point from lower to higher ids.
CausalDiagram random_diagram(std::mt19937_64& rng, int n, double p_edge, double p_bi, int max_bi);

// Random concrete counterfactual query: one to three events whose subscripts
// come from ancestors, optional conditioning and occasional nesting.
Query random_query(std::mt19937_64& rng, const CausalDiagram& g);

// One to three regimes mixing observation, rand() and ctf-rand().
std::vector<RegimeSpec> random_regimes(std::mt19937_64& rng, const CausalDiagram& g);

struct SoundnessCheck {
  bool identified = false;
  double worst = 0.0;  // largest |estimand - truth| over the models tried
};
// Runs the engine and, when it identifies, compares against the oracle on
// `models` random SCMs with seeds seed, seed+1, ...
SoundnessCheck check_soundness(const CausalDiagram& g, const Query& q, const std::vector<RegimeSpec>& regs,
                               int models, std::uint64_t seed);

CausalDiagram chain(int n);

// Hand-built front-door adjustment for P(Y[X=x]=y) over the observational
// table of X -> Z -> Y, X <-> Y:  sum_z P(z | x) sum_x' P(x') P(y | x', z).
// Symbols outside an input's kept set are bound to 0, as the engine does.
NodePtr frontdoor_reference(const CausalDiagram& g, int x, int y);

std::string fixture(const std::string& rel);

}  // namespace ctfid::testing
