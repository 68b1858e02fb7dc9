#include "backdrop/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "backdrop/intersect.hpp"
#include "backdrop/util.hpp"
#include "backdrop/wcfg.hpp"

namespace backdrop {

namespace {

const std::map<std::string, std::vector<std::string>>& synonym_table() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"article", {"article", "articles", "paper", "papers"}},
      {"meeting", {"meeting", "meetings", "appointment"}},
      {"whose", {"whose", "with", "where"}},
      {"is", {"is", "equals", "was"}},
      {"publication", {"publication", "published", "release"}},
      {"date", {"date", "year", "time"}},
      {"title", {"title", "name", "called"}},
      {"author", {"author", "writer", "by"}},
      {"january", {"january", "jan"}},
  };
  return table;
}

bool droppable(const std::string& tok) { return tok == "whose" || tok == "is"; }

// Ancestral sampling from a Pcfg shaped like a ds-grammar; returns the
// derivation sequence (leftmost expansion order == preorder).
DerivationSequence sample_ds(const Pcfg& p, Rng& rng, int max_len) {
  const Wcfg& g = p.g;
  auto by_lhs = g.rules_by_lhs();
  while (true) {
    DerivationSequence ds;
    std::vector<int> pending{g.start};
    bool too_long = false;
    while (!pending.empty()) {
      int nt = pending.back();
      pending.pop_back();
      const auto& choices = by_lhs[static_cast<size_t>(nt)];
      double u = rng.uniform();
      double acc = 0.0;
      int pick = choices.back();
      for (int ri : choices) {
        acc += g.rules[static_cast<size_t>(ri)].weight;
        if (u < acc) {
          pick = ri;
          break;
        }
      }
      const WcfgRule& r = g.rules[static_cast<size_t>(pick)];
      ds.push_back(r.rhs[0].id);  // leading terminal is the rule label
      for (size_t j = r.rhs.size(); j > 1; --j) pending.push_back(r.rhs[j - 1].id);
      if (static_cast<int>(ds.size()) > max_len) {
        too_long = true;
        break;
      }
    }
    if (!too_long) return ds;
  }
}

std::vector<std::string> paraphrase_once(const std::vector<std::string>& cf, Rng& rng) {
  std::vector<std::string> out;
  const auto& synonyms = synonym_table();
  for (const std::string& tok : cf) {
    if (droppable(tok) && rng.bernoulli(0.3)) continue;
    auto it = synonyms.find(tok);
    if (it != synonyms.end()) {
      out.push_back(it->second[rng.index(it->second.size())]);
    } else {
      out.push_back(tok);
    }
  }
  if (out.empty()) out = cf;
  return out;
}

std::vector<int> gold_entities(const DerivationSequence& ds, const std::set<int>& entity_set) {
  std::set<int> found;
  for (int label : ds) {
    if (entity_set.count(label)) found.insert(label);
  }
  return {found.begin(), found.end()};
}

}  // namespace

SynthCorpus synthesize(const Cfg& g, const EntityLexicon& lex, const AliasTable& aliases,
                       const SynthConfig& cfg) {
  Pcfg gw0 = normalize(build_ds_grammar(g));
  Rng rng(cfg.seed);

  std::vector<int> entities = entity_labels(g, cfg.entity_nonterminals);
  if (entities.size() < 2) {
    throw std::invalid_argument("synthesize: need at least two entity rules");
  }
  std::set<int> entity_set(entities.begin(), entities.end());

  SynthCorpus corpus;
  if (cfg.holdout_fraction > 0.0) {
    size_t k = static_cast<size_t>(std::llround(cfg.holdout_fraction * entities.size()));
    k = std::clamp<size_t>(k, 1, entities.size() - 1);
    std::vector<int> shuffled = entities;
    rng.shuffle(shuffled);
    corpus.heldout_labels.assign(shuffled.begin(), shuffled.begin() + static_cast<long>(k));
    std::sort(corpus.heldout_labels.begin(), corpus.heldout_labels.end());
  }
  std::set<int> heldout(corpus.heldout_labels.begin(), corpus.heldout_labels.end());

  auto contains_heldout = [&](const DerivationSequence& ds) {
    return std::any_of(ds.begin(), ds.end(), [&](int l) { return heldout.count(l) > 0; });
  };

  auto make_example = [&](bool forbid_heldout, bool force_heldout) {
    while (true) {
      DerivationSequence ds = sample_ds(gw0, rng, cfg.max_ds_len);
      if (forbid_heldout && contains_heldout(ds)) continue;
      if (force_heldout && !contains_heldout(ds)) continue;

      std::vector<std::string> cf = yield_cf(parse_ds(ds, g), g);
      std::vector<int> gold = gold_entities(ds, entity_set);
      std::vector<std::string> utterance = cf;
      for (int attempt = 0; attempt < 5; ++attempt) {
        std::vector<std::string> cand = paraphrase_once(cf, rng);
        if (detect_entities(cand, lex, aliases) == gold) {
          utterance = cand;
          break;
        }
      }
      return TrainingExample{std::move(utterance), std::move(ds)};
    }
  };

  for (int i = 0; i < cfg.train_size; ++i) {
    corpus.train.push_back(make_example(/*forbid_heldout=*/true, /*force_heldout=*/false));
  }
  int forced = heldout.empty() ? 0 : std::min(cfg.min_heldout_test, cfg.test_size);
  for (int i = 0; i < cfg.test_size - forced; ++i) {
    corpus.test.push_back(make_example(false, false));
  }
  for (int i = 0; i < forced; ++i) {
    corpus.test.push_back(make_example(false, /*force_heldout=*/true));
  }
  rng.shuffle(corpus.test);
  return corpus;
}

}  // namespace backdrop
