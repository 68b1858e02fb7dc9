#pragma once

#include <string>
#include <vector>

#include "backdrop/grammar.hpp"

namespace backdrop {

/// One (utterance, derivation sequence) pair. The sequence is complete and
/// valid for the grammar it was loaded against.
struct TrainingExample {
  std::vector<std::string> utterance;
  DerivationSequence ds;
};

/// File format: one example per line, utterance tokens, a tab, then rule
/// labels space-separated. Throws on unknown labels or sequences that do not
/// parse.
std::vector<TrainingExample> load_dataset(const std::string& text, const Cfg& g);
std::vector<TrainingExample> load_dataset_file(const std::string& path, const Cfg& g);
std::string dump_dataset(const std::vector<TrainingExample>& data, const Cfg& g);

}  // namespace backdrop
