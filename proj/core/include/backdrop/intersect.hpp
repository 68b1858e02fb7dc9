#pragma once

#include <optional>
#include <vector>

#include "backdrop/wcfg.hpp"
#include "backdrop/wfsa.hpp"

namespace backdrop {

/// Partition functions Z(A): total weight of all terminal strings derivable
/// from each nonterminal, as the least fixed point of
///   Z(A) = sum over rules A->beta of w * prod over nonterminals B of Z(B).
struct InsideTable {
  std::vector<double> z;
  int iterations = 0;
  bool converged = false;
  std::vector<int> divergent;  // nonterminals that blew past the guard / kept moving
};

/// Fixed-point iteration from Z == init (default 0, giving the least fixed
/// point). Divergence is declared when any Z exceeds 1e12 or max_iter runs
/// out with the residual still above tol; offending nonterminals are listed.
InsideTable inside_weights(const Wcfg& g, double tol = 1e-12, int max_iter = 10000,
                           std::optional<double> init = std::nullopt);

/// Drops weight-0 rules, unproductive nonterminals, and nonterminals
/// unreachable from start. String weights are unchanged; the terminal
/// interner is preserved (ids stay stable). The start symbol survives even
/// when the language is empty.
Wcfg trim(const Wcfg& g);

/// Weighted Bar-Hillel intersection: returns a trimmed Wcfg G' with
/// weight_{G'}(s) = weight_g(s) * string_weight(a, s) for every terminal
/// sequence s. Nonterminals of G' are (state, nonterminal, state) triples;
/// automaton exit weights are folded in through a fresh start symbol.
/// Throws on alphabet mismatch. An empty intersection is a zero-mass Wcfg,
/// not an error.
Wcfg intersect(const Wcfg& g, const Wfsa& a);

/// Nederhof/Satta renormalization: rule A->beta gets probability
/// w * prod Z(B) / Z(A) after trimming, preserving all weight ratios
/// between complete sequences. Throws on a divergent or zero partition
/// function.
Pcfg normalize(const Wcfg& g);

/// Z(start). Throws when the inside computation does not converge.
double total_mass(const Wcfg& g);

class ZeroMassError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Conditional next-symbol query against a Pcfg: probs[x] is the probability
/// mass of prefix.x.Sigma* divided by the mass of prefix.Sigma*; end_prob is
/// the mass of exactly prefix over the same denominator. probs is indexed by
/// the grammar's terminal ids.
struct NextSymbolDistribution {
  std::vector<double> probs;
  double end_prob = 0.0;
};

/// Computed by |alphabet| + 2 prefix-language intersections, as the masses
/// above. Throws ZeroMassError when the prefix has no extension of nonzero
/// weight.
NextSymbolDistribution next_symbol_distribution(const Pcfg& g, const DerivationSequence& prefix);

}  // namespace backdrop
