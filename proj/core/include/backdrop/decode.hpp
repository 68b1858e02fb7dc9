#pragma once

#include <string>
#include <vector>

#include "backdrop/background.hpp"
#include "backdrop/dataset.hpp"
#include "backdrop/scorer.hpp"

namespace backdrop {

class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DecodeResult {
  DerivationSequence ds;
  double cost = 0.0;  // -log combined probability, END step included
  size_t expansions = 0;
};

/// Uniform-cost search for the complete derivation sequence with the highest
/// combined probability. Per-step costs -log p are nonnegative, so the first
/// goal popped is optimal. Equal-cost nodes pop in lexicographic order of
/// their label-name sequences. Throws BudgetError when `budget` expansions
/// pass without popping a goal.
DecodeResult decode(const ScorerParams& params, const Background& bg,
                    const std::vector<std::string>& utterance, const NgramVocab& vocab,
                    const Cfg& g, size_t budget = 100000);

struct EvalOutcome {
  std::vector<std::string> utterance;
  std::string gold_lf;
  std::string predicted_lf;
  DerivationSequence predicted_ds;
  bool correct = false;
  bool decode_failed = false;
};

struct EvalReport {
  size_t total = 0;
  size_t correct = 0;
  std::vector<EvalOutcome> outcomes;

  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
};

/// Exact logical-form string match of decode output against the gold
/// sequence's LF. Decode failures count as wrong. `use_background = false`
/// scores with the input-independent grammar prior only.
EvalReport evaluate(const std::vector<TrainingExample>& data, const ScorerParams& params,
                    const NgramVocab& vocab, const Cfg& g, const EntityLexicon& lex,
                    const AliasTable& aliases, const PriorConfig& prior, bool use_background,
                    size_t budget = 100000, GwCache* cache = nullptr);

}  // namespace backdrop
