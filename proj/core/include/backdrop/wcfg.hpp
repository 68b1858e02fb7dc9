#pragma once

#include <string>
#include <vector>

#include "backdrop/grammar.hpp"
#include "backdrop/symbols.hpp"

namespace backdrop {

/// Rule of a weighted grammar over rule-label terminals. RhsItem::Token here
/// means a terminal (a rule label of the base grammar).
struct WcfgRule {
  int lhs;
  std::vector<RhsItem> rhs;
  double weight;
};

/// Weighted context-free grammar over derivation-sequence symbols. A string's
/// weight is the sum over its derivations of rule-weight products. Immutable
/// once built.
struct Wcfg {
  StringInterner nonterminals;
  StringInterner terminals;
  int start = -1;
  std::vector<WcfgRule> rules;

  std::vector<std::vector<int>> rules_by_lhs() const;
};

/// A Wcfg whose rule weights sum to 1 for every nonterminal. Construct via
/// normalize() or from_wcfg().
struct Pcfg {
  Wcfg g;

  /// Validates the per-nonterminal sum-to-one invariant (tolerance 1e-9).
  static Pcfg from_wcfg(Wcfg g);
};

/// True iff every nonterminal's outgoing rule weights sum to 1 within tol.
bool is_normalized(const Wcfg& g, double tol = 1e-9);

/// Build the derivation-sequence grammar: for each base rule r: A -> alpha,
/// a weighted rule A -> r B1..Bk over the nonterminals of alpha, with weight
/// 1/n_A where n_A is the number of base rules expanding A. Its language is
/// exactly the set of valid complete derivation sequences.
Wcfg build_ds_grammar(const Cfg& g);

/// Weight of a single derivation sequence: runs the leftmost reconstruction
/// against a ds-grammar shaped Wcfg. Intended for ds-grammars where each
/// terminal determines the rule; general Wcfg string weights live in the
/// oracle and intersection modules.
double ds_weight(const Wcfg& gw, const DerivationSequence& ds);

/// Serialization: one rule per line, `wN: lhs -> items @ weight`, terminals
/// double-quoted. Weights use the shortest exact decimal form, so
/// parse_wcfg(dump_wcfg(g)) reproduces g bit-exactly.
std::string dump_wcfg(const Wcfg& g);
Wcfg parse_wcfg(const std::string& text);
Wcfg parse_wcfg_file(const std::string& path);

}  // namespace backdrop
