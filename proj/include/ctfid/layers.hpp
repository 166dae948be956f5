#pragma once

#include <string>

#include "ctfid/expr.hpp"

namespace ctfid {

enum class Layer { L1, L2, L2_25, L2_5, L3 };

std::string layer_name(Layer l);

// A conjunction can be sampled by some combination of physical actions iff
// its counterfactual ancestors never hold one variable under two different
// subscripts. Nested input is un-nested first.
bool realizable_check(const CausalDiagram& g, const Conjunction& w);

// Lowest layer whose definition the joint event of the query satisfies.
Layer classify_layer(const CausalDiagram& g, const Query& q);

}  // namespace ctfid
