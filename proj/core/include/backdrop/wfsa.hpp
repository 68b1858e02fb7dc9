#pragma once

#include <map>
#include <string>
#include <vector>

#include "backdrop/grammar.hpp"
#include "backdrop/symbols.hpp"

namespace backdrop {

/// Weighted finite-state automaton over rule labels. Single initial state
/// with implicit initial weight 1; per-state exit weights (0 = non-final).
/// A string's weight is the sum over accepting paths of the path product
/// times the end state's exit weight. Immutable after construction.
class Wfsa {
 public:
  struct Transition {
    int from;
    int sym;
    double weight;
    int to;
  };

  Wfsa(int num_states, int initial, StringInterner alphabet, std::vector<Transition> transitions,
       std::vector<double> exits);

  int num_states() const { return num_states_; }
  int initial() const { return initial_; }
  const StringInterner& alphabet() const { return alphabet_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  const std::vector<double>& exits() const { return exits_; }
  double exit(int state) const { return exits_[static_cast<size_t>(state)]; }

  /// Outgoing arcs from `state` on `sym`, as (to, weight) pairs. Parallel
  /// arcs are merged at construction (their weights add).
  const std::vector<std::pair<int, double>>& arcs(int state, int sym) const;

  /// Total weight of `seq`; throws std::invalid_argument on a symbol outside
  /// the alphabet.
  double string_weight(const DerivationSequence& seq) const;

 private:
  int num_states_;
  int initial_;
  StringInterner alphabet_;
  std::vector<Transition> transitions_;
  std::vector<double> exits_;
  std::vector<std::vector<std::pair<int, double>>> arcs_;  // state * |alphabet| + sym
};

/// Fig.-2-left topology: one final state (exit 1), self-loop weight 1 on
/// every symbol except `sym`, which loops with weight delta. Downweights
/// each occurrence of `sym` by delta.
Wfsa penalize_automaton(int sym, double delta, const StringInterner& alphabet);

/// Fig.-2-middle topology: state 0 (initial, exit eta) self-loops on all
/// symbols but `sym` and steps to state 1 on it; state 1 (exit 1) self-loops
/// on everything. Weight 1 for sequences containing `sym`, eta otherwise.
Wfsa require_automaton(int sym, double eta, const StringInterner& alphabet);

/// Fig.-2-right topology: one final state (exit 1) with self-loop weight
/// probs[x] on each symbol x. `probs` must cover the alphabet.
Wfsa unigram_automaton(const std::vector<double>& probs, const StringInterner& alphabet);

/// One state, all self-loops weight 1, exit 1: the multiplicative identity.
Wfsa identity_automaton(const StringInterner& alphabet);

/// Accepts prefix . Sigma* with weight 1 (everything else 0). With
/// exact = true the final self-loops are dropped and only the prefix itself
/// is accepted.
Wfsa prefix_automaton(const DerivationSequence& prefix, const StringInterner& alphabet,
                      bool exact = false);

/// Standard product construction over reachable state pairs: transition and
/// exit weights multiply, so string_weight(product) ==
/// string_weight(a) * string_weight(b) for every sequence. Throws on
/// alphabet mismatch.
Wfsa product(const Wfsa& a, const Wfsa& b);

/// Text format: `states N`, `initial q`, `alphabet sym...`, one
/// `trans from sym weight to` per arc and `exit state weight` per final
/// state. Weights round-trip exactly.
std::string dump_wfsa(const Wfsa& a);
Wfsa parse_wfsa(const std::string& text);

}  // namespace backdrop
