#pragma once

#include <vector>

#include "backdrop/intersect.hpp"
#include "backdrop/wcfg.hpp"

namespace backdrop {
namespace oracle {

struct WeightedString {
  DerivationSequence seq;
  double weight;
};

/// Every terminal string of length <= max_len with its total weight (summed
/// over derivations), by exhaustive leftmost expansion with length pruning.
/// Deliberately slow and simple; throws when the expansion queue exceeds
/// `cap` items.
std::vector<WeightedString> enumerate_wcfg(const Wcfg& g, int max_len, size_t cap = 2000000);

/// Next-symbol conditional estimated from enumerate_wcfg truncated at
/// max_len. tail_mass = total_mass(g) - (sum of enumerated weights) bounds
/// what the truncation can have missed; each reported ratio is within
/// tail_mass / prefix_mass of the exact conditional.
struct BruteConditional {
  std::vector<double> probs;  // indexed by terminal id
  double end_prob = 0.0;
  double prefix_mass = 0.0;  // enumerated mass of prefix . Sigma*
  double tail_mass = 0.0;
};

BruteConditional brute_conditional(const Wcfg& g, const DerivationSequence& prefix, int max_len);

}  // namespace oracle
}  // namespace backdrop
