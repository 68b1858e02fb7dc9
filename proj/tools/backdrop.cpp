// backdrop: grammar-automaton priors for sequence decoding, end to end.
//
// Subcommands cover the whole pipeline: grammar checking, the
// derivation-sequence grammar, intersection/normalization/prefix queries on
// serialized inputs, entity detection, synthetic corpus generation, scorer
// training, decoding, evaluation, the KL diagnostic, and brute-force oracle
// checks.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <set>

#include "backdrop/background.hpp"
#include "backdrop/corpus.hpp"
#include "backdrop/dataset.hpp"
#include "backdrop/decode.hpp"
#include "backdrop/grammar.hpp"
#include "backdrop/intersect.hpp"
#include "backdrop/oracle.hpp"
#include "backdrop/scorer.hpp"
#include "backdrop/util.hpp"
#include "backdrop/wcfg.hpp"
#include "backdrop/wfsa.hpp"

namespace bd = backdrop;

namespace {

void emit(const std::string& path, const std::string& contents) {
  if (path.empty() || path == "-") {
    std::cout << contents;
  } else {
    bd::write_file(path, contents);
  }
}

bd::DerivationSequence parse_terminal_names(const std::string& text, const bd::Wcfg& g) {
  bd::DerivationSequence out;
  for (const std::string& name : bd::tokenize(text)) {
    auto id = g.terminals.id_of(name);
    if (!id) throw std::runtime_error("unknown terminal '" + name + "'");
    out.push_back(*id);
  }
  return out;
}

std::string describe_distribution(const bd::NextSymbolDistribution& dist, const bd::Wcfg& g) {
  std::string out;
  for (size_t x = 0; x < dist.probs.size(); ++x) {
    if (dist.probs[x] > 0.0) {
      out += g.terminals.name(static_cast<int>(x)) + " " + bd::format_double(dist.probs[x]) + "\n";
    }
  }
  out += "END " + bd::format_double(dist.end_prob) + "\n";
  return out;
}

bd::AliasTable load_aliases(const std::string& path) {
  return path.empty() ? bd::AliasTable{} : bd::parse_aliases_file(path);
}

struct HeldoutFilter {
  std::set<int> labels;

  bool matches(const bd::DerivationSequence& ds) const {
    for (int l : ds) {
      if (labels.count(l)) return true;
    }
    return false;
  }
};

HeldoutFilter load_heldout(const std::string& path, const bd::Cfg& g) {
  HeldoutFilter f;
  if (path.empty()) return f;
  for (int l : bd::parse_labels(bd::read_file(path), g)) f.labels.insert(l);
  return f;
}

void print_eval_block(const std::string& name, const bd::EvalReport& report,
                      const HeldoutFilter& heldout, const std::vector<bd::TrainingExample>& data) {
  std::cout << name << ": accuracy " << bd::format_double(report.accuracy()) << " ("
            << report.correct << "/" << report.total << ")\n";
  if (!heldout.labels.empty()) {
    size_t total = 0, correct = 0;
    for (size_t i = 0; i < data.size(); ++i) {
      if (!heldout.matches(data[i].ds)) continue;
      ++total;
      correct += report.outcomes[i].correct ? 1 : 0;
    }
    double acc = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    std::cout << name << ": held-out-entity accuracy " << bd::format_double(acc) << " (" << correct
              << "/" << total << ")\n";
  }
}

void write_records(const std::string& path, const bd::EvalReport& report, const bd::Cfg& g) {
  std::string out;
  for (const auto& o : report.outcomes) {
    nlohmann::json rec;
    rec["utterance"] = bd::join(o.utterance);
    rec["gold_lf"] = o.gold_lf;
    rec["predicted_lf"] = o.predicted_lf;
    rec["predicted_ds"] = bd::labels_to_string(o.predicted_ds, g);
    rec["correct"] = o.correct;
    rec["decode_failed"] = o.decode_failed;
    out += rec.dump() + "\n";
  }
  bd::write_file(path, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"input-dependent grammar priors for sequence decoding"};
  app.require_subcommand(1);

  std::string grammar_path, aliases_path, wcfg_path, automaton_path, data_path, model_path;
  std::string baseline_path, utterance, prefix_text, out_path, records_path, heldout_path;
  double eta = 0.01, delta = 0.001, lr = 0.1;
  int epochs = 30, max_len = 12, samples = 100;
  uint64_t seed = 42;
  size_t budget = 100000;
  bool no_background = false;

  auto add_grammar = [&](CLI::App* cmd, bool required = true) {
    auto* opt = cmd->add_option("--grammar", grammar_path, "grammar file")
                    ->check(CLI::ExistingFile);
    if (required) opt->required();
    cmd->add_option("--aliases", aliases_path, "alias rewrite file")->check(CLI::ExistingFile);
  };

  auto* check = app.add_subcommand("check", "validate a grammar file");
  add_grammar(check);

  auto* dsg = app.add_subcommand("ds-grammar", "print the derivation-sequence grammar");
  add_grammar(dsg);
  dsg->add_option("--out", out_path, "output path (default stdout)");

  auto* inter = app.add_subcommand("intersect", "intersect a serialized wcfg with an automaton");
  inter->add_option("--wcfg", wcfg_path, "weighted grammar file")
      ->check(CLI::ExistingFile)
      ->required();
  inter->add_option("--automaton", automaton_path, "automaton file")
      ->check(CLI::ExistingFile)
      ->required();
  inter->add_option("--out", out_path, "output path (default stdout)");

  auto* norm = app.add_subcommand("normalize", "renormalize a serialized wcfg into a pcfg");
  norm->add_option("--wcfg", wcfg_path, "weighted grammar file")
      ->check(CLI::ExistingFile)
      ->required();
  norm->add_option("--out", out_path, "output path (default stdout)");

  auto* pdist = app.add_subcommand("prefix-dist", "next-symbol distribution after a prefix");
  pdist->add_option("--wcfg", wcfg_path, "weighted grammar file");
  pdist->add_option("--grammar", grammar_path, "base grammar (uses its ds-grammar)");
  pdist->add_option("--prefix", prefix_text, "space-separated rule labels")->required();

  auto* detect = app.add_subcommand("detect", "report detected entities for an utterance");
  add_grammar(detect);
  detect->add_option("--utterance", utterance, "input utterance")->required();
  detect->add_option("--eta", eta, "require-automaton exit weight")->check(CLI::Range(0.0, 1.0));
  detect->add_option("--dump-automaton", out_path, "dump the detection automaton product here");

  auto* synth = app.add_subcommand("synth", "generate a synthetic (utterance, ds) corpus");
  add_grammar(synth);
  synth->add_option("--out", out_path, "output directory")->required();
  bd::SynthConfig synth_cfg;
  synth->add_option("--train-size", synth_cfg.train_size, "training examples");
  synth->add_option("--test-size", synth_cfg.test_size, "test examples");
  synth->add_option("--holdout-frac", synth_cfg.holdout_fraction,
                    "fraction of entity rules held out of training");
  synth->add_option("--min-heldout", synth_cfg.min_heldout_test,
                    "test items guaranteed to contain a held-out entity");
  synth->add_option("--max-len", synth_cfg.max_ds_len, "rejection bound on sequence length");
  synth->add_option("--seed", synth_cfg.seed, "random seed");

  auto* train = app.add_subcommand("train", "fit a scorer on a dataset");
  add_grammar(train);
  train->add_option("--data", data_path, "training dataset (tsv)")
      ->check(CLI::ExistingFile)
      ->required();
  train->add_option("--out", out_path, "model output path")->required();
  train->add_option("--eta", eta, "require-automaton exit weight")->check(CLI::Range(0.0, 1.0));
  train->add_option("--delta", delta, "penalize-automaton weight");
  train->add_option("--epochs", epochs, "training epochs");
  train->add_option("--lr", lr, "learning rate");
  train->add_option("--seed", seed, "random seed");
  train->add_flag("--no-background", no_background,
                  "train against the input-independent grammar prior only");

  auto* decode_cmd = app.add_subcommand("decode", "parse one utterance with a trained model");
  add_grammar(decode_cmd);
  decode_cmd->add_option("--model", model_path, "model file")->check(CLI::ExistingFile)->required();
  decode_cmd->add_option("--utterance", utterance, "input utterance")->required();
  decode_cmd->add_option("--eta", eta, "require-automaton exit weight")->check(CLI::Range(0.0, 1.0));
  decode_cmd->add_option("--budget", budget, "uniform-cost search expansion budget");
  decode_cmd->add_flag("--no-background", no_background, "decode without input-dependent factors");

  auto* eval_cmd = app.add_subcommand("eval", "score a dataset with and without background");
  add_grammar(eval_cmd);
  eval_cmd->add_option("--model", model_path, "model trained with background")
      ->check(CLI::ExistingFile)
      ->required();
  eval_cmd->add_option("--baseline-model", baseline_path,
                       "model trained without background (defaults to --model)");
  eval_cmd->add_option("--data", data_path, "evaluation dataset (tsv)")
      ->check(CLI::ExistingFile)
      ->required();
  eval_cmd->add_option("--eta", eta, "require-automaton exit weight")->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--budget", budget, "uniform-cost search expansion budget");
  eval_cmd->add_option("--heldout", heldout_path, "file of held-out entity labels");
  eval_cmd->add_option("--records", records_path, "write per-example JSON records here");

  auto* kl = app.add_subcommand("kl-report", "mean KL to uniform at entity-expansion steps");
  add_grammar(kl);
  kl->add_option("--model", model_path, "model trained with background")
      ->check(CLI::ExistingFile)
      ->required();
  kl->add_option("--baseline-model", baseline_path, "model trained without background")
      ->required();
  kl->add_option("--data", data_path, "dataset (tsv)")->check(CLI::ExistingFile)->required();
  kl->add_option("--samples", samples, "sampled entity steps");
  kl->add_option("--seed", seed, "sampling seed");

  auto* oracle_cmd = app.add_subcommand("oracle", "brute-force enumeration and conditionals");
  oracle_cmd->add_option("--wcfg", wcfg_path, "weighted grammar file");
  oracle_cmd->add_option("--grammar", grammar_path, "base grammar (uses its ds-grammar)");
  oracle_cmd->add_option("--max-len", max_len, "enumeration length bound");
  oracle_cmd->add_option("--prefix", prefix_text, "report the brute-force conditional instead");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) {
      bd::Cfg g = bd::load_grammar_file(grammar_path);
      std::cout << "ok: " << g.rules.size() << " rules, " << g.syms.nonterminals.size()
                << " nonterminals, " << g.syms.tokens.size() << " surface tokens\n";
      return 0;
    }

    if (*dsg) {
      bd::Cfg g = bd::load_grammar_file(grammar_path);
      emit(out_path, bd::dump_wcfg(bd::build_ds_grammar(g)));
      return 0;
    }

    if (*inter) {
      bd::Wcfg g = bd::parse_wcfg_file(wcfg_path);
      bd::Wfsa a = bd::parse_wfsa(bd::read_file(automaton_path));
      emit(out_path, bd::dump_wcfg(bd::intersect(g, a)));
      return 0;
    }

    if (*norm) {
      bd::Wcfg g = bd::parse_wcfg_file(wcfg_path);
      emit(out_path, bd::dump_wcfg(bd::normalize(g).g));
      return 0;
    }

    if (*pdist) {
      if (wcfg_path.empty() == grammar_path.empty()) {
        throw std::runtime_error("prefix-dist needs exactly one of --wcfg / --grammar");
      }
      bd::Wcfg g = wcfg_path.empty()
                       ? bd::build_ds_grammar(bd::load_grammar_file(grammar_path))
                       : bd::parse_wcfg_file(wcfg_path);
      bd::Pcfg p = bd::normalize(g);
      auto dist = bd::next_symbol_distribution(p, parse_terminal_names(prefix_text, p.g));
      std::cout << describe_distribution(dist, p.g);
      return 0;
    }

    if (*detect) {
      bd::Cfg g = bd::load_grammar_file(grammar_path);
      bd::EntityLexicon lex = bd::build_lexicon(g);
      bd::AliasTable aliases = load_aliases(aliases_path);
      auto labels = bd::detect_entities(bd::tokenize(utterance), lex, aliases);
      std::cout << "detected " << labels.size() << " entit" << (labels.size() == 1 ? "y" : "ies")
                << "\n";
      for (int l : labels) {
        const bd::Rule& r = g.rule(l);
        std::cout << g.label_name(l) << " (" << g.nt_name(r.lhs) << ")\n";
      }
      if (!out_path.empty()) {
        bd::Wcfg gw0 = bd::build_ds_grammar(g);
        bd::Wfsa a = labels.empty()
                         ? bd::identity_automaton(gw0.terminals)
                         : bd::require_automaton(labels[0], eta, gw0.terminals);
        for (size_t i = 1; i < labels.size(); ++i) {
          a = bd::product(a, bd::require_automaton(labels[i], eta, gw0.terminals));
        }
        bd::write_file(out_path, bd::dump_wfsa(a));
      }
      return 0;
    }

    if (*synth) {
      bd::Cfg g = bd::load_grammar_file(grammar_path);
      bd::EntityLexicon lex = bd::build_lexicon(g);
      bd::AliasTable aliases = load_aliases(aliases_path);
      bd::SynthCorpus corpus = bd::synthesize(g, lex, aliases, synth_cfg);
      std::filesystem::create_directories(out_path);
      bd::write_file(out_path + "/train.tsv", bd::dump_dataset(corpus.train, g));
      bd::write_file(out_path + "/test.tsv", bd::dump_dataset(corpus.test, g));
      std::string held;
      for (int l : corpus.heldout_labels) held += g.label_name(l) + "\n";
      bd::write_file(out_path + "/heldout.txt", held);
      std::cout << "wrote " << corpus.train.size() << " train / " << corpus.test.size()
                << " test examples to " << out_path << "\n";
      std::cout << "held-out entities:";
      for (int l : corpus.heldout_labels) std::cout << " " << g.label_name(l);
      std::cout << "\n";
      return 0;
    }

    if (*train) {
      bd::Cfg g = bd::load_grammar_file(grammar_path);
      bd::EntityLexicon lex = bd::build_lexicon(g);
      bd::AliasTable aliases = load_aliases(aliases_path);
      auto data = bd::load_dataset_file(data_path, g);
      bd::NgramVocab vocab = bd::NgramVocab::build(data);
      bd::TrainConfig cfg;
      cfg.epochs = epochs;
      cfg.learning_rate = lr;
      cfg.seed = seed;
      bd::GwCache cache(g);
      bd::TrainReport report;
      bd::ScorerParams params = bd::train(data, g, lex, aliases, cfg, bd::PriorConfig{eta, delta},
                                          !no_background, vocab, &cache, &report);
      bd::save_model_file(out_path, params, vocab);
      std::cout << "trained " << epochs << " epochs on " << data.size() << " examples ("
                << (no_background ? "without" : "with") << " background)\n";
      std::cout << "per-step loss: epoch 1 " << bd::format_double(report.epoch_losses.front())
                << ", final " << bd::format_double(report.epoch_losses.back()) << "\n";
      std::cout << "model written to " << out_path << "\n";
      return 0;
    }

    if (*decode_cmd) {
      bd::Cfg g = bd::load_grammar_file(grammar_path);
      bd::EntityLexicon lex = bd::build_lexicon(g);
      bd::AliasTable aliases = load_aliases(aliases_path);
      bd::ScorerParams params;
      bd::NgramVocab vocab;
      bd::load_model_file(model_path, &params, &vocab);
      auto tokens = bd::tokenize(utterance);
      bd::Background bg = bd::build_background(g, tokens, no_background ? bd::EntityLexicon{} : lex,
                                               aliases, bd::PriorConfig{eta, delta});
      if (bg.fell_back()) {
        std::cerr << "warning: infeasible background, fell back to the grammar-only prior\n";
      }
      bd::DecodeResult res = bd::decode(params, bg, tokens, vocab, g, budget);
      bd::DerivationTree tree = bd::parse_ds(res.ds, g);
      std::cout << "ds: " << bd::labels_to_string(res.ds, g) << "\n";
      std::cout << "cf: " << bd::join(bd::yield_cf(tree, g)) << "\n";
      std::cout << "lf: " << bd::compose_lf(tree, g) << "\n";
      return 0;
    }

    if (*eval_cmd) {
      bd::Cfg g = bd::load_grammar_file(grammar_path);
      bd::EntityLexicon lex = bd::build_lexicon(g);
      bd::AliasTable aliases = load_aliases(aliases_path);
      auto data = bd::load_dataset_file(data_path, g);
      HeldoutFilter heldout = load_heldout(heldout_path, g);
      bd::GwCache cache(g);

      bd::ScorerParams params;
      bd::NgramVocab vocab;
      bd::load_model_file(model_path, &params, &vocab);
      bd::EvalReport with_bg = bd::evaluate(data, params, vocab, g, lex, aliases,
                                            bd::PriorConfig{eta, delta}, true, budget, &cache);

      bd::ScorerParams base_params;
      bd::NgramVocab base_vocab;
      bd::load_model_file(baseline_path.empty() ? model_path : baseline_path, &base_params,
                          &base_vocab);
      bd::EvalReport without_bg =
          bd::evaluate(data, base_params, base_vocab, g, lex, aliases,
                       bd::PriorConfig{eta, delta}, false, budget, &cache);

      print_eval_block("with background", with_bg, heldout, data);
      print_eval_block("without background", without_bg, heldout, data);
      if (!records_path.empty()) write_records(records_path, with_bg, g);
      return 0;
    }

    if (*kl) {
      bd::Cfg g = bd::load_grammar_file(grammar_path);
      auto data = bd::load_dataset_file(data_path, g);
      bd::ScorerParams params, base_params;
      bd::NgramVocab vocab, base_vocab;
      bd::load_model_file(model_path, &params, &vocab);
      bd::load_model_file(baseline_path, &base_params, &base_vocab);
      double with_bg = bd::mean_entity_kl(data, params, vocab, g, {"entitynp"}, samples, seed);
      double without_bg =
          bd::mean_entity_kl(data, base_params, base_vocab, g, {"entitynp"}, samples, seed);
      std::cout << "mean KL to uniform at entity-expansion steps (" << samples << " samples)\n";
      std::cout << "  with background    " << bd::format_double(with_bg) << "\n";
      std::cout << "  without background " << bd::format_double(without_bg) << "\n";
      return 0;
    }

    if (*oracle_cmd) {
      if (wcfg_path.empty() == grammar_path.empty()) {
        throw std::runtime_error("oracle needs exactly one of --wcfg / --grammar");
      }
      bd::Wcfg g = wcfg_path.empty()
                       ? bd::build_ds_grammar(bd::load_grammar_file(grammar_path))
                       : bd::parse_wcfg_file(wcfg_path);
      if (prefix_text.empty()) {
        for (const auto& ws : bd::oracle::enumerate_wcfg(g, max_len)) {
          std::vector<std::string> names;
          for (int t : ws.seq) names.push_back(g.terminals.name(t));
          std::cout << bd::format_double(ws.weight) << "\t" << bd::join(names) << "\n";
        }
      } else {
        auto cond =
            bd::oracle::brute_conditional(g, parse_terminal_names(prefix_text, g), max_len);
        bd::NextSymbolDistribution dist{cond.probs, cond.end_prob};
        std::cout << describe_distribution(dist, g);
        std::cout << "# enumerated prefix mass " << bd::format_double(cond.prefix_mass)
                  << ", unenumerated tail <= " << bd::format_double(cond.tail_mass) << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "backdrop: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
