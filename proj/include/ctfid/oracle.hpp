#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctfid/estimand.hpp"
#include "ctfid/scm.hpp"

namespace ctfid {

// Largest exogenous space enumerated exactly. The CTFID_CAP environment
// variable overrides the default of 2^24.
std::uint64_t enumeration_cap();

// Exact Layer-3 valuation by exhaustive enumeration of the exogenous space.
double l3_valuation(const DiscreteSCM& m, const Conjunction& w);
double l3_valuation_serial(const DiscreteSCM& m, const Conjunction& w);
double l3_query(const DiscreteSCM& m, const Query& q);

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
};
Estimate l3_monte_carlo(const DiscreteSCM& m, const Query& q, std::size_t n, std::uint64_t seed);

// Table of P(events) over every assignment of the symbols used by the
// events (Val::idx(s) is symbol s with domain cards[s]). Symbols that are
// not the value of any event are treated as settings: each of their slices
// is a separate distribution.
std::vector<double> symbolic_table(const DiscreteSCM& m, const Conjunction& events,
                                   const std::vector<int>& cards);
std::vector<double> symbolic_table_serial(const DiscreteSCM& m, const Conjunction& events,
                                          const std::vector<int>& cards);

RegimeTable regime_distribution(const DiscreteSCM& m, const RegimeSpec& a);
// Simulates the regime directly, without the template; used to cross-check it.
RegimeTable regime_distribution_direct(const DiscreteSCM& m, const RegimeSpec& a);

struct Dataset {
  std::vector<std::string> columns;
  std::vector<std::vector<int>> rows;
};
// Actions draw their values uniformly at random.
Dataset sample_regime(const DiscreteSCM& m, const RegimeSpec& a, std::size_t n, std::uint64_t seed);
std::string dataset_csv(const Dataset& d);

}  // namespace ctfid
