#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "backdrop/grammar.hpp"
#include "backdrop/intersect.hpp"
#include "backdrop/wcfg.hpp"

namespace backdrop {

struct PriorConfig {
  double eta = 0.01;     // exit weight of the require automata
  double delta = 0.001;  // penalize automata, when composed explicitly
};

/// Surface token-sequence variants mapped to the rule label they indicate.
class EntityLexicon {
 public:
  struct Entry {
    std::vector<std::string> variant;  // lowercase tokens
    int label;
  };

  void add_variant(std::vector<std::string> variant, int label);
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

/// Variants come from the surface yields of rules whose LHS nonterminal is
/// named in `entity_nonterminals` (rules with nonterminal children are
/// skipped: they are not concrete entities).
EntityLexicon build_lexicon(const Cfg& g,
                            const std::set<std::string>& entity_nonterminals = {"entitynp"});

/// Labels of rules whose LHS nonterminal is named in `entity_nonterminals`.
std::vector<int> entity_labels(const Cfg& g, const std::set<std::string>& entity_nonterminals);

/// Token-sequence rewrites (e.g. month abbreviations) applied to utterances
/// before lexicon matching. Each variant maps to exactly one canonical form
/// and no canonical form is itself a variant.
class AliasTable {
 public:
  void add(std::vector<std::string> variant, std::vector<std::string> canonical);
  std::vector<std::string> apply(const std::vector<std::string>& tokens) const;

 private:
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> rules_;
};

/// File format: one `variant tokens => canonical tokens` per line; '#'
/// starts a comment.
AliasTable parse_aliases(const std::string& text);
AliasTable parse_aliases_file(const std::string& path);

/// Labels whose variants occur contiguously in the alias-canonicalized
/// utterance. Longest match wins at overlapping positions; each label is
/// reported at most once. Result is sorted.
std::vector<int> detect_entities(const std::vector<std::string>& utterance,
                                 const EntityLexicon& lex, const AliasTable& aliases);

class GwCache;
class Background;
Background build_background(const Cfg& g, const std::vector<std::string>& utterance,
                            const EntityLexicon& lex, const AliasTable& aliases,
                            const PriorConfig& prior, GwCache* cache = nullptr);

/// The input-conditioned prior: GW_NL plus a memoized conditional query
/// interface. Immutable once built; the memo is internal and behaves as if
/// absent.
class Background {
 public:
  const std::vector<std::string>& utterance() const { return utterance_; }
  const std::vector<int>& detected() const { return detected_; }
  const Pcfg& gw_nl() const;
  const PriorConfig& prior() const { return prior_; }
  /// True when the intersection had zero mass and GW_NL fell back to the
  /// input-independent grammar.
  bool fell_back() const { return fell_back_; }

  NextSymbolDistribution conditional(const DerivationSequence& prefix) const;

 private:
  friend class GwCache;
  friend Background build_background(const Cfg& g, const std::vector<std::string>& utterance,
                                     const EntityLexicon& lex, const AliasTable& aliases,
                                     const PriorConfig& prior, GwCache* cache);

  Background() = default;

  struct Model;  // Pcfg + memoized conditionals
  std::vector<std::string> utterance_;
  std::vector<int> detected_;
  PriorConfig prior_;
  bool fell_back_ = false;
  std::shared_ptr<const Model> model_;
};

/// Shares one GW_NL (and its conditional memo) per (detected label set, eta):
/// the grammar depends on nothing else. Safe for concurrent lookups.
class GwCache {
 public:
  explicit GwCache(const Cfg& g) : g_(&g) {}

  std::shared_ptr<const Background::Model> get_or_build(const std::vector<int>& detected,
                                                        const PriorConfig& prior,
                                                        bool* fell_back);

 private:
  struct Entry {
    std::shared_ptr<const Background::Model> model;
    bool fell_back;
  };

  std::shared_ptr<const Background::Model> input_independent_locked(double eta);

  const Cfg* g_;
  std::mutex mu_;
  std::map<std::pair<std::vector<int>, double>, Entry> models_;
};

/// build_background: detect entities in the utterance, require each detected
/// label through a product of Fig.-2-middle automata, intersect with the
/// derivation-sequence grammar and renormalize. Zero detections (or a
/// zero-mass intersection, reachable when eta == 0) yield the
/// input-independent normalized grammar, the latter with fell_back() set.
/// Declared above Background; cache may be null (a transient one is used).

NextSymbolDistribution background_conditional(const Background& b,
                                              const DerivationSequence& prefix);

}  // namespace backdrop
