#pragma once

#include <vector>

#include "ctfid/engine.hpp"
#include "ctfid/scm.hpp"

namespace ctfid {

struct WitnessReport {
  DiscreteSCM m1, m2;
  // Largest |P1 - P2| over every instantiation of each input event set.
  double input_gap = 0.0;
  // Smallest gap, over instantiations of the root subscripts, in the
  // probability that the root values have even parity (lowest bit).
  double target_gap = 0.0;
  double smoothed_input_gap = 0.0;
  double smoothed_target_gap = 0.0;
  double eps = 1e-3;
  DiscreteSCM s1, s2;  // smoothed copies
};

// Parity models over the variables of g, one bit per hedge. All hedges must
// share the root set. Throws if any entry is not a hedge.
WitnessReport thicket_witness(const CausalDiagram& g, const std::vector<Hedge>& hedges,
                              double eps = 1e-3);
WitnessReport hedge_witness(const CausalDiagram& g, const Hedge& h, double eps = 1e-3);

// Index domains used by symbolic tables over a hedge's events.
std::vector<int> symbol_cards(const Conjunction& events, int card);

}  // namespace ctfid
