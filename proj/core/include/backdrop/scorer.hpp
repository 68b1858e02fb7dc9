#pragma once

#include <Eigen/Core>
#include <set>
#include <string>
#include <vector>

#include "backdrop/background.hpp"
#include "backdrop/dataset.hpp"
#include "backdrop/grammar.hpp"
#include "backdrop/util.hpp"

namespace backdrop {

/// Dense, insertion-ordered indices of utterance unigrams and bigrams; the
/// last index of each space is reserved for out-of-vocabulary items.
class NgramVocab {
 public:
  static NgramVocab build(const std::vector<TrainingExample>& data);

  int uni_dim() const { return unigrams_.size() + 1; }
  int bi_dim() const { return bigrams_.size() + 1; }
  int uni_id(const std::string& tok) const;
  int bi_id(const std::string& a, const std::string& b) const;
  const StringInterner& unigrams() const { return unigrams_; }
  const StringInterner& bigrams() const { return bigrams_; }

  StringInterner unigrams_;  // public-ish: the model loader rebuilds these
  StringInterner bigrams_;   // (bigram key: "first second")
};

struct ScorerDims {
  int embed = 16;
  int rnn = 32;
  int proj = 16;  // each of the unigram and bigram projections
  int head = 32;
};

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 0.1;
  ScorerDims dims;
  double dropout_u1 = 0.1;
  double dropout_u2 = 0.3;
  double init_scale = 0.1;
  uint64_t seed = 42;
};

/// All trainable parameters. The same struct doubles as gradient storage.
struct ScorerParams {
  ScorerDims dims;
  int n_uni = 0, n_bi = 0, n_labels = 0;

  Eigen::MatrixXd w_uni, w_bi;  // proj x n_uni, proj x n_bi
  Eigen::VectorXd b_uni, b_bi;
  Eigen::MatrixXd embed;        // embed x n_labels
  Eigen::MatrixXd w_xh, w_hh;   // rnn x embed, rnn x rnn
  Eigen::VectorXd b_rnn;
  Eigen::MatrixXd w_h1;  // head x (rnn + 2 proj)
  Eigen::VectorXd b_h1;
  Eigen::MatrixXd w_h2;  // (n_labels + 1) x head; row n_labels scores END
  Eigen::VectorXd b_h2;

  static ScorerParams zeros(const ScorerDims& dims, int n_uni, int n_bi, int n_labels);
  static ScorerParams random_init(const ScorerDims& dims, int n_uni, int n_bi, int n_labels,
                                  double scale, Rng& rng);

  int end_index() const { return n_labels; }

  /// Flat coordinate view across all blocks, used by SGD updates and the
  /// finite-difference checks.
  size_t size() const;
  double coeff(size_t i) const;
  double& coeff(size_t i);
  void add_scaled(const ScorerParams& other, double scale);
  bool all_finite() const;
};

/// u_b: concatenation of the projected bag of unigrams and bag of bigrams.
/// With dropout active, components of the two projections are masked
/// independently (inverted scaling) at the given rates using `rng`.
Eigen::VectorXd encode_input(const std::vector<std::string>& utterance, const NgramVocab& vocab,
                             const ScorerParams& params, bool dropout_active = false,
                             Rng* rng = nullptr, double dropout_u1 = 0.1, double dropout_u2 = 0.3);

/// Softmax over rule labels + END after running the recurrent cell along the
/// prefix and the two-layer head on concat(state, u_b). Strictly positive.
Eigen::VectorXd model_distribution(const ScorerParams& params, const Eigen::VectorXd& u_b,
                                   const DerivationSequence& prefix);

/// Renormalized product p(x) = b(x) m(x) / sum_y b(y) m(y). Symbols with
/// b(x) = 0 are excluded from the support. Throws when b is all zero.
Eigen::VectorXd combined_distribution(const Eigen::VectorXd& model, const Eigen::VectorXd& bg);

/// The background conditional as a dense vector over labels + END.
Eigen::VectorXd bg_vector(const NextSymbolDistribution& dist);

/// Sum over steps (including the END step) of -log combined probability of
/// the gold symbol. Throws when a gold symbol has zero background
/// probability, identifying the step.
double sequence_loss(const TrainingExample& example, const ScorerParams& params,
                     const Background& bg, const NgramVocab& vocab, bool dropout_active = false,
                     Rng* rng = nullptr, double dropout_u1 = 0.1, double dropout_u2 = 0.3);

/// Exact analytic gradient of sequence_loss with dropout inactive. The
/// background term is constant in the parameters: gradients flow only
/// through the model logits of the combined softmax.
ScorerParams grad(const TrainingExample& example, const ScorerParams& params, const Background& bg,
                  const NgramVocab& vocab, double* loss_out = nullptr);

struct TrainReport {
  std::vector<double> epoch_losses;  // dropout-inactive mean per-step loss
};

/// Plain SGD on the mean per-step loss, one example at a time, for
/// cfg.epochs epochs. Backgrounds are built per example through `cache`
/// (detection skipped entirely when use_background is false). Deterministic
/// given cfg.seed. Throws on non-finite parameters, identifying epoch/step.
ScorerParams train(const std::vector<TrainingExample>& dataset, const Cfg& g,
                   const EntityLexicon& lex, const AliasTable& aliases, const TrainConfig& cfg,
                   const PriorConfig& prior, bool use_background, const NgramVocab& vocab,
                   GwCache* cache = nullptr, TrainReport* report = nullptr);

/// Mean KL divergence from model_distribution to the uniform distribution at
/// steps whose gold symbol is an entity rule, over up to `samples` steps
/// drawn with `seed`.
double mean_entity_kl(const std::vector<TrainingExample>& data, const ScorerParams& params,
                      const NgramVocab& vocab, const Cfg& g,
                      const std::set<std::string>& entity_nonterminals, int samples,
                      uint64_t seed);

/// Versioned structured-text model file holding the vocab and every
/// parameter block; save/load round-trips bit-exactly.
std::string dump_model(const ScorerParams& params, const NgramVocab& vocab);
void load_model(const std::string& text, ScorerParams* params, NgramVocab* vocab);
void save_model_file(const std::string& path, const ScorerParams& params,
                     const NgramVocab& vocab);
void load_model_file(const std::string& path, ScorerParams* params, NgramVocab* vocab);

}  // namespace backdrop
