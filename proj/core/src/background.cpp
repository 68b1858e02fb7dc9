#include "backdrop/background.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

#include "backdrop/util.hpp"
#include "backdrop/wfsa.hpp"

namespace backdrop {

struct Background::Model {
  Pcfg pcfg;
  mutable std::mutex mu;
  mutable std::map<DerivationSequence, NextSymbolDistribution> memo;
};

const Pcfg& Background::gw_nl() const { return model_->pcfg; }

NextSymbolDistribution Background::conditional(const DerivationSequence& prefix) const {
  {
    std::lock_guard<std::mutex> lock(model_->mu);
    auto it = model_->memo.find(prefix);
    if (it != model_->memo.end()) return it->second;
  }
  NextSymbolDistribution dist = next_symbol_distribution(model_->pcfg, prefix);
  std::lock_guard<std::mutex> lock(model_->mu);
  return model_->memo.emplace(prefix, std::move(dist)).first->second;
}

void EntityLexicon::add_variant(std::vector<std::string> variant, int label) {
  if (variant.empty()) throw std::invalid_argument("lexicon: empty variant");
  for (std::string& tok : variant) {
    auto lowered = tokenize(tok);
    if (lowered.size() != 1) throw std::invalid_argument("lexicon: variant token with spaces");
    tok = lowered[0];
  }
  entries_.push_back({std::move(variant), label});
}

EntityLexicon build_lexicon(const Cfg& g, const std::set<std::string>& entity_nonterminals) {
  EntityLexicon lex;
  for (const Rule& r : g.rules) {
    if (!entity_nonterminals.count(g.nt_name(r.lhs))) continue;
    std::vector<std::string> variant;
    bool flat = true;
    for (const RhsItem& item : r.rhs) {
      if (item.is_nt()) {
        flat = false;
        break;
      }
      variant.push_back(g.syms.tokens.name(item.id));
    }
    if (flat) lex.add_variant(std::move(variant), r.label);
  }
  return lex;
}

std::vector<int> entity_labels(const Cfg& g, const std::set<std::string>& entity_nonterminals) {
  std::vector<int> out;
  for (const Rule& r : g.rules) {
    if (entity_nonterminals.count(g.nt_name(r.lhs))) out.push_back(r.label);
  }
  return out;
}

void AliasTable::add(std::vector<std::string> variant, std::vector<std::string> canonical) {
  if (variant.empty() || canonical.empty()) {
    throw std::invalid_argument("alias: empty variant or canonical form");
  }
  for (const auto& [v, c] : rules_) {
    if (v == variant) throw std::invalid_argument("alias: duplicate variant '" + join(variant) + "'");
    if (c == variant || v == canonical) {
      throw std::invalid_argument("alias: chained rewrite involving '" + join(variant) + "'");
    }
  }
  rules_.emplace_back(std::move(variant), std::move(canonical));
}

std::vector<std::string> AliasTable::apply(const std::vector<std::string>& tokens) const {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < tokens.size()) {
    const std::pair<std::vector<std::string>, std::vector<std::string>>* best = nullptr;
    for (const auto& rule : rules_) {
      if (best && rule.first.size() <= best->first.size()) continue;
      if (i + rule.first.size() > tokens.size()) continue;
      if (std::equal(rule.first.begin(), rule.first.end(), tokens.begin() + static_cast<long>(i))) {
        best = &rule;
      }
    }
    if (best) {
      out.insert(out.end(), best->second.begin(), best->second.end());
      i += best->first.size();
    } else {
      out.push_back(tokens[i]);
      ++i;
    }
  }
  return out;
}

AliasTable parse_aliases(const std::string& text) {
  AliasTable table;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    size_t a = line.find_first_not_of(" \t\r\n");
    if (a == std::string::npos || line[a] == '#') continue;
    size_t sep = line.find("=>");
    if (sep == std::string::npos) {
      throw std::runtime_error("aliases line " + std::to_string(lineno) + ": missing '=>'");
    }
    auto variant = tokenize(line.substr(0, sep));
    auto canonical = tokenize(line.substr(sep + 2));
    if (variant.empty() || canonical.empty()) {
      throw std::runtime_error("aliases line " + std::to_string(lineno) + ": empty side");
    }
    table.add(std::move(variant), std::move(canonical));
  }
  return table;
}

AliasTable parse_aliases_file(const std::string& path) { return parse_aliases(read_file(path)); }

std::vector<int> detect_entities(const std::vector<std::string>& utterance,
                                 const EntityLexicon& lex, const AliasTable& aliases) {
  std::vector<std::string> tokens = aliases.apply(utterance);
  std::set<int> found;
  size_t i = 0;
  while (i < tokens.size()) {
    const EntityLexicon::Entry* best = nullptr;
    for (const auto& e : lex.entries()) {
      if (best && e.variant.size() <= best->variant.size()) continue;
      if (i + e.variant.size() > tokens.size()) continue;
      if (std::equal(e.variant.begin(), e.variant.end(), tokens.begin() + static_cast<long>(i))) {
        best = &e;
      }
    }
    if (best) {
      found.insert(best->label);
      i += best->variant.size();
    } else {
      ++i;
    }
  }
  return {found.begin(), found.end()};
}

std::shared_ptr<const Background::Model> GwCache::input_independent_locked(double eta) {
  auto key = std::make_pair(std::vector<int>{}, eta);
  auto it = models_.find(key);
  if (it != models_.end()) return it->second.model;
  auto model = std::make_shared<Background::Model>();
  model->pcfg = normalize(build_ds_grammar(*g_));
  models_.emplace(key, Entry{model, false});
  return model;
}

std::shared_ptr<const Background::Model> GwCache::get_or_build(const std::vector<int>& detected,
                                                               const PriorConfig& prior,
                                                               bool* fell_back) {
  // Feasibility is a function of the key, so fallbacks are cached under the
  // infeasible key as well.
  std::lock_guard<std::mutex> lock(mu_);
  *fell_back = false;
  if (detected.empty()) return input_independent_locked(prior.eta);

  auto key = std::make_pair(detected, prior.eta);
  auto it = models_.find(key);
  if (it != models_.end()) {
    *fell_back = it->second.fell_back;
    return it->second.model;
  }

  Wcfg gw0 = build_ds_grammar(*g_);
  Wfsa factors = require_automaton(detected[0], prior.eta, gw0.terminals);
  for (size_t i = 1; i < detected.size(); ++i) {
    factors = product(factors, require_automaton(detected[i], prior.eta, gw0.terminals));
  }
  Wcfg intersected = trim(intersect(gw0, factors));
  Entry entry;
  if (total_mass(intersected) <= 0.0) {
    std::string names;
    for (int l : detected) names += " " + g_->label_name(l);
    std::cerr << "backdrop: infeasible background (eta=" << prior.eta << ", required" << names
              << "); falling back to the input-independent grammar\n";
    entry.model = input_independent_locked(prior.eta);
    entry.fell_back = true;
  } else {
    auto model = std::make_shared<Background::Model>();
    model->pcfg = normalize(intersected);
    entry.model = std::move(model);
    entry.fell_back = false;
  }
  models_.emplace(key, entry);
  *fell_back = entry.fell_back;
  return entry.model;
}

Background build_background(const Cfg& g, const std::vector<std::string>& utterance,
                            const EntityLexicon& lex, const AliasTable& aliases,
                            const PriorConfig& prior, GwCache* cache) {
  GwCache local(g);
  GwCache* use = cache ? cache : &local;

  Background b;
  b.utterance_ = utterance;
  b.detected_ = detect_entities(utterance, lex, aliases);
  b.prior_ = prior;
  bool fell_back = false;
  b.model_ = use->get_or_build(b.detected_, prior, &fell_back);
  b.fell_back_ = fell_back;
  return b;
}

NextSymbolDistribution background_conditional(const Background& b,
                                              const DerivationSequence& prefix) {
  return b.conditional(prefix);
}

}  // namespace backdrop
