#pragma once

#include <string>
#include <vector>

#include "backdrop/symbols.hpp"

namespace backdrop {

/// One position on a rule's right-hand side: either a surface token or a
/// nonterminal.
struct RhsItem {
  enum class Kind { Token, Nonterminal };
  Kind kind;
  int id;

  static RhsItem token(int id) { return {Kind::Token, id}; }
  static RhsItem nonterminal(int id) { return {Kind::Nonterminal, id}; }
  bool is_nt() const { return kind == Kind::Nonterminal; }
  auto operator<=>(const RhsItem&) const = default;
};

/// A labeled grammar rule. The logical-form template contains one $i
/// placeholder per RHS nonterminal, numbered in RHS order.
struct Rule {
  int label;
  int lhs;
  std::vector<RhsItem> rhs;
  std::string lf_template;
  std::vector<int> nt_ids;  // RHS nonterminals in order, for convenience
};

/// Base grammar. Rule index == rule label id (labels are interned in file
/// order). Immutable after load.
struct Cfg {
  SymbolTable syms;
  int start = -1;
  std::vector<Rule> rules;
  std::vector<std::vector<int>> by_lhs;  // nonterminal id -> rule indices

  const Rule& rule(int label) const { return rules[static_cast<size_t>(label)]; }
  const std::string& label_name(int label) const { return syms.labels.name(label); }
  const std::string& nt_name(int nt) const { return syms.nonterminals.name(nt); }
};

/// Thrown by load_grammar; `violations` lists every problem found, not just
/// the first.
class GrammarError : public std::runtime_error {
 public:
  explicit GrammarError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Parse the grammar file format:
///   label: lhs -> item1 item2 ... | lf_template
/// Items are double-quoted surface tokens or bare nonterminal identifiers;
/// the start symbol is the LHS of the first rule; '#' starts a comment line.
Cfg load_grammar(const std::string& text);

Cfg load_grammar_file(const std::string& path);

/// Serialize back to the file format; load_grammar(dump_grammar(g)) is
/// structurally identical to g.
std::string dump_grammar(const Cfg& g);

struct DerivationTree {
  int rule;
  std::vector<DerivationTree> children;
};

using DerivationSequence = std::vector<int>;  // rule label ids

class DsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Preorder (root first, children left to right) listing of rule labels.
DerivationSequence linearize(const DerivationTree& tree);

/// Inverse of linearize. Throws DsError on lhs mismatch, an incomplete
/// sequence, or trailing labels.
DerivationTree parse_ds(const DerivationSequence& ds, const Cfg& g);

/// True iff the prefix extends to at least one complete derivation sequence.
bool is_valid_prefix(const DerivationSequence& prefix, const Cfg& g);

/// Surface-token yield (the canonical form).
std::vector<std::string> yield_cf(const DerivationTree& tree, const Cfg& g);

/// Recursive template substitution producing the logical form.
std::string compose_lf(const DerivationTree& tree, const Cfg& g);

/// Parse a whitespace-separated list of rule-label names into ids. Throws
/// DsError on unknown labels.
DerivationSequence parse_labels(const std::string& text, const Cfg& g);

std::string labels_to_string(const DerivationSequence& ds, const Cfg& g);

}  // namespace backdrop
