#pragma once

#include <set>
#include <string>
#include <vector>

#include "backdrop/background.hpp"
#include "backdrop/dataset.hpp"

namespace backdrop {

struct SynthConfig {
  int train_size = 500;
  int test_size = 100;
  /// Fraction of entity rules withheld from every training example (at least
  /// one when positive, and always leaving at least one entity in training).
  double holdout_fraction = 0.2;
  /// Test items guaranteed to contain a held-out entity.
  int min_heldout_test = 20;
  /// Sampled sequences longer than this are rejected and redrawn.
  int max_ds_len = 7;
  uint64_t seed = 42;
  std::set<std::string> entity_nonterminals = {"entitynp"};
};

struct SynthCorpus {
  std::vector<TrainingExample> train;
  std::vector<TrainingExample> test;
  std::vector<int> heldout_labels;
};

/// Samples derivation sequences from the normalized derivation-sequence
/// grammar, renders each canonical form, and paraphrases it with a small
/// synonym/word-drop table into an utterance. Paraphrases that change which
/// entities are detected are redrawn (falling back to the plain canonical
/// form), so detection agrees with the gold sequence on every item.
SynthCorpus synthesize(const Cfg& g, const EntityLexicon& lex, const AliasTable& aliases,
                       const SynthConfig& cfg);

}  // namespace backdrop
