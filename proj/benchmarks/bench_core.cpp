#include <benchmark/benchmark.h>

#include "backdrop/background.hpp"
#include "backdrop/decode.hpp"
#include "backdrop/grammar.hpp"
#include "backdrop/intersect.hpp"
#include "backdrop/scorer.hpp"
#include "backdrop/util.hpp"
#include "backdrop/wcfg.hpp"
#include "backdrop/wfsa.hpp"

namespace {

using namespace backdrop;

Cfg synth() { return load_grammar_file(std::string(FIXTURE_DIR) + "/synth.grammar"); }

void BM_Intersect(benchmark::State& state) {
  Cfg g = synth();
  Wcfg gw0 = build_ds_grammar(g);
  Wfsa req = product(require_automaton(*g.syms.labels.id_of("entitynp0"), 0.01, gw0.terminals),
                     require_automaton(*g.syms.labels.id_of("entitynp2"), 0.01, gw0.terminals));
  for (auto _ : state) {
    benchmark::DoNotOptimize(intersect(gw0, req));
  }
}
BENCHMARK(BM_Intersect);

void BM_InsideWeights(benchmark::State& state) {
  Cfg g = synth();
  Wcfg gw0 = build_ds_grammar(g);
  Wcfg inter =
      intersect(gw0, require_automaton(*g.syms.labels.id_of("entitynp0"), 0.01, gw0.terminals));
  for (auto _ : state) {
    benchmark::DoNotOptimize(inside_weights(inter));
  }
}
BENCHMARK(BM_InsideWeights);

void BM_NextSymbolDistribution(benchmark::State& state) {
  Cfg g = synth();
  Wcfg gw0 = build_ds_grammar(g);
  Pcfg p = normalize(
      intersect(gw0, require_automaton(*g.syms.labels.id_of("entitynp0"), 0.01, gw0.terminals)));
  DerivationSequence prefix = parse_labels("s0 np0 np1 typenp0 cp0", g);
  for (auto _ : state) {
    benchmark::DoNotOptimize(next_symbol_distribution(p, prefix));
  }
}
BENCHMARK(BM_NextSymbolDistribution);

void BM_BackgroundConditionalMemoized(benchmark::State& state) {
  Cfg g = synth();
  EntityLexicon lex = build_lexicon(g);
  Background bg = build_background(g, tokenize("articles from 1950"), lex, AliasTable{},
                                   PriorConfig{0.01});
  DerivationSequence prefix = parse_labels("s0 np0 np1 typenp0 cp0", g);
  background_conditional(bg, prefix);  // warm the memo
  for (auto _ : state) {
    benchmark::DoNotOptimize(background_conditional(bg, prefix));
  }
}
BENCHMARK(BM_BackgroundConditionalMemoized);

void BM_SequenceGradient(benchmark::State& state) {
  Cfg g = synth();
  EntityLexicon lex = build_lexicon(g);
  TrainingExample ex{tokenize("articles whose author is alice"),
                     parse_labels("s0 np0 np1 typenp0 cp0 relnp2 entitynp2", g)};
  NgramVocab vocab = NgramVocab::build({ex});
  Rng rng(1);
  ScorerParams params = ScorerParams::random_init(ScorerDims{}, vocab.uni_dim(), vocab.bi_dim(),
                                                  g.syms.labels.size(), 0.1, rng);
  Background bg = build_background(g, ex.utterance, lex, AliasTable{}, PriorConfig{0.01});
  sequence_loss(ex, params, bg, vocab);  // warm the conditional memo
  for (auto _ : state) {
    benchmark::DoNotOptimize(grad(ex, params, bg, vocab));
  }
}
BENCHMARK(BM_SequenceGradient);

void BM_Decode(benchmark::State& state) {
  Cfg g = synth();
  EntityLexicon lex = build_lexicon(g);
  std::vector<std::string> utterance = tokenize("articles whose author is alice");
  NgramVocab vocab = NgramVocab::build({TrainingExample{utterance, {}}});
  Rng rng(2);
  ScorerParams params = ScorerParams::random_init(ScorerDims{}, vocab.uni_dim(), vocab.bi_dim(),
                                                  g.syms.labels.size(), 0.05, rng);
  Background bg = build_background(g, utterance, lex, AliasTable{}, PriorConfig{0.01});
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode(params, bg, utterance, vocab, g));
  }
}
BENCHMARK(BM_Decode);

}  // namespace

BENCHMARK_MAIN();
