#include "backdrop/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace backdrop {

namespace {

Eigen::VectorXd softmax(Eigen::VectorXd z) {
  double m = z.maxCoeff();
  z = (z.array() - m).exp();
  return z / z.sum();
}

}  // namespace

NgramVocab NgramVocab::build(const std::vector<TrainingExample>& data) {
  NgramVocab v;
  for (const TrainingExample& ex : data) {
    for (const std::string& tok : ex.utterance) v.unigrams_.intern(tok);
    for (size_t i = 0; i + 1 < ex.utterance.size(); ++i) {
      v.bigrams_.intern(ex.utterance[i] + " " + ex.utterance[i + 1]);
    }
  }
  return v;
}

int NgramVocab::uni_id(const std::string& tok) const {
  auto id = unigrams_.id_of(tok);
  return id ? *id : unigrams_.size();
}

int NgramVocab::bi_id(const std::string& a, const std::string& b) const {
  auto id = bigrams_.id_of(a + " " + b);
  return id ? *id : bigrams_.size();
}

ScorerParams ScorerParams::zeros(const ScorerDims& dims, int n_uni, int n_bi, int n_labels) {
  ScorerParams p;
  p.dims = dims;
  p.n_uni = n_uni;
  p.n_bi = n_bi;
  p.n_labels = n_labels;
  p.w_uni = Eigen::MatrixXd::Zero(dims.proj, n_uni);
  p.b_uni = Eigen::VectorXd::Zero(dims.proj);
  p.w_bi = Eigen::MatrixXd::Zero(dims.proj, n_bi);
  p.b_bi = Eigen::VectorXd::Zero(dims.proj);
  p.embed = Eigen::MatrixXd::Zero(dims.embed, n_labels);
  p.w_xh = Eigen::MatrixXd::Zero(dims.rnn, dims.embed);
  p.w_hh = Eigen::MatrixXd::Zero(dims.rnn, dims.rnn);
  p.b_rnn = Eigen::VectorXd::Zero(dims.rnn);
  p.w_h1 = Eigen::MatrixXd::Zero(dims.head, dims.rnn + 2 * dims.proj);
  p.b_h1 = Eigen::VectorXd::Zero(dims.head);
  p.w_h2 = Eigen::MatrixXd::Zero(n_labels + 1, dims.head);
  p.b_h2 = Eigen::VectorXd::Zero(n_labels + 1);
  return p;
}

ScorerParams ScorerParams::random_init(const ScorerDims& dims, int n_uni, int n_bi, int n_labels,
                                       double scale, Rng& rng) {
  ScorerParams p = zeros(dims, n_uni, n_bi, n_labels);
  // Weights uniform in [-scale, scale]; biases stay zero.
  for (Eigen::MatrixXd* m : {&p.w_uni, &p.w_bi, &p.embed, &p.w_xh, &p.w_hh, &p.w_h1, &p.w_h2}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      m->data()[i] = rng.uniform(-scale, scale);
    }
  }
  return p;
}

namespace {

struct BlockView {
  double* data;
  size_t n;
};

template <typename Params>
std::vector<BlockView> blocks(Params& p) {
  auto view = [](auto& m) {
    return BlockView{const_cast<double*>(m.data()), static_cast<size_t>(m.size())};
  };
  return {view(p.w_uni), view(p.b_uni), view(p.w_bi), view(p.b_bi), view(p.embed), view(p.w_xh),
          view(p.w_hh), view(p.b_rnn), view(p.w_h1), view(p.b_h1), view(p.w_h2), view(p.b_h2)};
}

}  // namespace

size_t ScorerParams::size() const {
  size_t total = 0;
  for (const BlockView& b : blocks(*this)) total += b.n;
  return total;
}

double ScorerParams::coeff(size_t i) const { return const_cast<ScorerParams*>(this)->coeff(i); }

double& ScorerParams::coeff(size_t i) {
  for (const BlockView& b : blocks(*this)) {
    if (i < b.n) return b.data[i];
    i -= b.n;
  }
  throw std::out_of_range("ScorerParams::coeff");
}

void ScorerParams::add_scaled(const ScorerParams& other, double scale) {
  auto mine = blocks(*this);
  auto theirs = blocks(other);
  for (size_t k = 0; k < mine.size(); ++k) {
    for (size_t i = 0; i < mine[k].n; ++i) mine[k].data[i] += scale * theirs[k].data[i];
  }
}

bool ScorerParams::all_finite() const {
  for (const BlockView& b : blocks(*this)) {
    for (size_t i = 0; i < b.n; ++i) {
      if (!std::isfinite(b.data[i])) return false;
    }
  }
  return true;
}

namespace {

using Bag = std::vector<std::pair<int, double>>;  // (feature id, count)

Bag bag_of(const std::vector<int>& ids) {
  std::map<int, double> counts;
  for (int id : ids) counts[id] += 1.0;
  return {counts.begin(), counts.end()};
}

Eigen::VectorXd project_bag(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, const Bag& bag) {
  Eigen::VectorXd out = b;
  for (const auto& [id, count] : bag) out += count * w.col(id);
  return out;
}

// Everything the backward pass needs from one forward run.
struct Tape {
  Bag bag_uni, bag_bi;
  Eigen::VectorXd mask1, mask2;  // dropout multipliers (ones when inactive)
  Eigen::VectorXd u_b;
  std::vector<Eigen::VectorXd> h;                    // T+1 recurrent states, h[0] = 0
  std::vector<Eigen::VectorXd> hid, prob;            // per step: head hidden, combined dist
  std::vector<int> gold;                             // per step target (END = n_labels)
  double loss = 0.0;
};

void input_bags(const std::vector<std::string>& utterance, const NgramVocab& vocab, Bag* bag_uni,
                Bag* bag_bi) {
  std::vector<int> uni, bi;
  for (const std::string& tok : utterance) uni.push_back(vocab.uni_id(tok));
  for (size_t i = 0; i + 1 < utterance.size(); ++i) {
    bi.push_back(vocab.bi_id(utterance[i], utterance[i + 1]));
  }
  *bag_uni = bag_of(uni);
  *bag_bi = bag_of(bi);
}

Eigen::VectorXd dropout_mask(int n, double rate, bool active, Rng* rng) {
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(n);
  if (!active || rate <= 0.0) return mask;
  if (!rng) throw std::invalid_argument("dropout requires an rng");
  double keep = 1.0 - rate;
  for (int i = 0; i < n; ++i) mask[i] = rng->bernoulli(rate) ? 0.0 : 1.0 / keep;
  return mask;
}

Eigen::VectorXd encode_with_tape(const std::vector<std::string>& utterance,
                                 const NgramVocab& vocab, const ScorerParams& p,
                                 bool dropout_active, Rng* rng, double rate1, double rate2,
                                 Tape* tape) {
  Bag bag_uni, bag_bi;
  input_bags(utterance, vocab, &bag_uni, &bag_bi);
  Eigen::VectorXd u1 = project_bag(p.w_uni, p.b_uni, bag_uni);
  Eigen::VectorXd u2 = project_bag(p.w_bi, p.b_bi, bag_bi);
  Eigen::VectorXd mask1 = dropout_mask(p.dims.proj, rate1, dropout_active, rng);
  Eigen::VectorXd mask2 = dropout_mask(p.dims.proj, rate2, dropout_active, rng);
  Eigen::VectorXd u_b(2 * p.dims.proj);
  u_b << u1.cwiseProduct(mask1), u2.cwiseProduct(mask2);
  if (tape) {
    tape->bag_uni = std::move(bag_uni);
    tape->bag_bi = std::move(bag_bi);
    tape->mask1 = std::move(mask1);
    tape->mask2 = std::move(mask2);
    tape->u_b = u_b;
  }
  return u_b;
}

std::vector<Eigen::VectorXd> run_rnn(const ScorerParams& p, const DerivationSequence& prefix) {
  std::vector<Eigen::VectorXd> h;
  h.reserve(prefix.size() + 1);
  h.push_back(Eigen::VectorXd::Zero(p.dims.rnn));
  for (int label : prefix) {
    Eigen::VectorXd pre = p.w_xh * p.embed.col(label) + p.w_hh * h.back() + p.b_rnn;
    h.push_back(pre.array().tanh().matrix());
  }
  return h;
}

Eigen::VectorXd head_logits(const ScorerParams& p, const Eigen::VectorXd& state,
                            const Eigen::VectorXd& u_b, Eigen::VectorXd* hid_out) {
  Eigen::VectorXd z(p.dims.rnn + 2 * p.dims.proj);
  z << state, u_b;
  Eigen::VectorXd hid = (p.w_h1 * z + p.b_h1).array().tanh().matrix();
  if (hid_out) *hid_out = hid;
  return p.w_h2 * hid + p.b_h2;
}

// Softmax of (logits + log b) over the support of b; equals the renormalized
// product of the model distribution with b.
Eigen::VectorXd combined_from_logits(const Eigen::VectorXd& logits, const Eigen::VectorXd& bg) {
  const Eigen::Index n = logits.size();
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  Eigen::VectorXd score(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (bg[i] > 0.0) {
      score[i] = logits[i] + std::log(bg[i]);
      best = std::max(best, score[i]);
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("combined distribution: background is all zero");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (bg[i] > 0.0) {
      p[i] = std::exp(score[i] - best);
      sum += p[i];
    }
  }
  return p / sum;
}

// Forward pass over the whole sequence; one recurrent sweep serves every
// step because prefix t is just the first t labels.
void forward(const TrainingExample& ex, const ScorerParams& p, const Background& bg,
             const NgramVocab& vocab, bool dropout_active, Rng* rng, double rate1, double rate2,
             Tape* tape) {
  encode_with_tape(ex.utterance, vocab, p, dropout_active, rng, rate1, rate2, tape);
  tape->h = run_rnn(p, ex.ds);
  const size_t steps = ex.ds.size() + 1;  // + END
  tape->hid.resize(steps);
  tape->prob.resize(steps);
  tape->gold.resize(steps);
  tape->loss = 0.0;

  DerivationSequence prefix;
  for (size_t t = 0; t < steps; ++t) {
    Eigen::VectorXd logits = head_logits(p, tape->h[t], tape->u_b, &tape->hid[t]);
    Eigen::VectorXd bgv = bg_vector(bg.conditional(prefix));
    int gold = t < ex.ds.size() ? ex.ds[t] : p.end_index();
    if (bgv[gold] <= 0.0) {
      throw std::runtime_error("sequence_loss: gold symbol has zero background probability at step " +
                               std::to_string(t));
    }
    tape->prob[t] = combined_from_logits(logits, bgv);
    tape->gold[t] = gold;
    tape->loss += -std::log(tape->prob[t][gold]);
    if (t < ex.ds.size()) prefix.push_back(ex.ds[t]);
  }
}

ScorerParams backward(const TrainingExample& ex, const ScorerParams& p, const Tape& tape) {
  ScorerParams g = ScorerParams::zeros(p.dims, p.n_uni, p.n_bi, p.n_labels);
  const size_t steps = ex.ds.size() + 1;

  Eigen::VectorXd du_b = Eigen::VectorXd::Zero(2 * p.dims.proj);
  std::vector<Eigen::VectorXd> dh(tape.h.size(), Eigen::VectorXd::Zero(p.dims.rnn));

  for (size_t t = 0; t < steps; ++t) {
    // d loss / d logits for the combined softmax: p - onehot(gold) on the
    // support, zero elsewhere (p is already zero off-support).
    Eigen::VectorXd dlogits = tape.prob[t];
    dlogits[tape.gold[t]] -= 1.0;

    g.w_h2 += dlogits * tape.hid[t].transpose();
    g.b_h2 += dlogits;
    Eigen::VectorXd dhid = p.w_h2.transpose() * dlogits;
    Eigen::VectorXd dpre1 =
        dhid.cwiseProduct((1.0 - tape.hid[t].array().square()).matrix());
    Eigen::VectorXd z(p.dims.rnn + 2 * p.dims.proj);
    z << tape.h[t], tape.u_b;
    g.w_h1 += dpre1 * z.transpose();
    g.b_h1 += dpre1;
    Eigen::VectorXd dz = p.w_h1.transpose() * dpre1;
    dh[t] += dz.head(p.dims.rnn);
    du_b += dz.tail(2 * p.dims.proj);
  }

  // Backpropagation through time over the shared recurrent sweep.
  for (size_t t = tape.h.size() - 1; t >= 1; --t) {
    Eigen::VectorXd dpre = dh[t].cwiseProduct((1.0 - tape.h[t].array().square()).matrix());
    int label = ex.ds[t - 1];
    g.w_xh += dpre * p.embed.col(label).transpose();
    g.embed.col(label) += p.w_xh.transpose() * dpre;
    g.w_hh += dpre * tape.h[t - 1].transpose();
    g.b_rnn += dpre;
    dh[t - 1] += p.w_hh.transpose() * dpre;
  }

  Eigen::VectorXd du1 = du_b.head(p.dims.proj).cwiseProduct(tape.mask1);
  Eigen::VectorXd du2 = du_b.tail(p.dims.proj).cwiseProduct(tape.mask2);
  for (const auto& [id, count] : tape.bag_uni) g.w_uni.col(id) += count * du1;
  g.b_uni += du1;
  for (const auto& [id, count] : tape.bag_bi) g.w_bi.col(id) += count * du2;
  g.b_bi += du2;
  return g;
}

}  // namespace

Eigen::VectorXd encode_input(const std::vector<std::string>& utterance, const NgramVocab& vocab,
                             const ScorerParams& params, bool dropout_active, Rng* rng,
                             double dropout_u1, double dropout_u2) {
  return encode_with_tape(utterance, vocab, params, dropout_active, rng, dropout_u1, dropout_u2,
                          nullptr);
}

Eigen::VectorXd model_distribution(const ScorerParams& params, const Eigen::VectorXd& u_b,
                                   const DerivationSequence& prefix) {
  auto h = run_rnn(params, prefix);
  return softmax(head_logits(params, h.back(), u_b, nullptr));
}

Eigen::VectorXd combined_distribution(const Eigen::VectorXd& model, const Eigen::VectorXd& bg) {
  if (model.size() != bg.size()) {
    throw std::invalid_argument("combined distribution: size mismatch");
  }
  Eigen::VectorXd p = model.cwiseProduct(bg);
  double sum = p.sum();
  if (sum <= 0.0) throw std::invalid_argument("combined distribution: background is all zero");
  return p / sum;
}

Eigen::VectorXd bg_vector(const NextSymbolDistribution& dist) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dist.probs.size()) + 1);
  for (size_t i = 0; i < dist.probs.size(); ++i) v[static_cast<Eigen::Index>(i)] = dist.probs[i];
  v[static_cast<Eigen::Index>(dist.probs.size())] = dist.end_prob;
  return v;
}

double sequence_loss(const TrainingExample& example, const ScorerParams& params,
                     const Background& bg, const NgramVocab& vocab, bool dropout_active, Rng* rng,
                     double dropout_u1, double dropout_u2) {
  Tape tape;
  forward(example, params, bg, vocab, dropout_active, rng, dropout_u1, dropout_u2, &tape);
  return tape.loss;
}

ScorerParams grad(const TrainingExample& example, const ScorerParams& params, const Background& bg,
                  const NgramVocab& vocab, double* loss_out) {
  Tape tape;
  forward(example, params, bg, vocab, false, nullptr, 0.0, 0.0, &tape);
  if (loss_out) *loss_out = tape.loss;
  return backward(example, params, tape);
}

ScorerParams train(const std::vector<TrainingExample>& dataset, const Cfg& g,
                   const EntityLexicon& lex, const AliasTable& aliases, const TrainConfig& cfg,
                   const PriorConfig& prior, bool use_background, const NgramVocab& vocab,
                   GwCache* cache, TrainReport* report) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  for (double rate : {cfg.dropout_u1, cfg.dropout_u2}) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("train: dropout must be in [0, 1)");
  }

  GwCache local_cache(g);
  if (!cache) cache = &local_cache;
  const EntityLexicon no_lex;

  std::vector<Background> backgrounds;
  backgrounds.reserve(dataset.size());
  for (const TrainingExample& ex : dataset) {
    backgrounds.push_back(
        build_background(g, ex.utterance, use_background ? lex : no_lex, aliases, prior, cache));
  }

  Rng rng(cfg.seed);
  ScorerParams params = ScorerParams::random_init(cfg.dims, vocab.uni_dim(), vocab.bi_dim(),
                                                  g.syms.labels.size(), cfg.init_scale, rng);

  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t step = 0; step < order.size(); ++step) {
      const TrainingExample& ex = dataset[order[step]];
      Tape tape;
      forward(ex, params, backgrounds[order[step]], vocab, true, &rng, cfg.dropout_u1,
              cfg.dropout_u2, &tape);
      ScorerParams gradient = backward(ex, params, tape);
      double steps_in_ex = static_cast<double>(ex.ds.size() + 1);
      params.add_scaled(gradient, -cfg.learning_rate / steps_in_ex);
      if (!std::isfinite(tape.loss) || !params.all_finite()) {
        throw std::runtime_error("train: diverged (non-finite value) at epoch " +
                                 std::to_string(epoch) + ", step " + std::to_string(step));
      }
    }
    if (report) {
      double total = 0.0, steps_total = 0.0;
      for (size_t i = 0; i < dataset.size(); ++i) {
        total += sequence_loss(dataset[i], params, backgrounds[i], vocab);
        steps_total += static_cast<double>(dataset[i].ds.size() + 1);
      }
      report->epoch_losses.push_back(total / steps_total);
    }
  }
  return params;
}

double mean_entity_kl(const std::vector<TrainingExample>& data, const ScorerParams& params,
                      const NgramVocab& vocab, const Cfg& g,
                      const std::set<std::string>& entity_nonterminals, int samples,
                      uint64_t seed) {
  std::set<int> entities;
  for (int label : entity_labels(g, entity_nonterminals)) entities.insert(label);

  std::vector<std::pair<size_t, size_t>> steps;  // (example, position)
  for (size_t i = 0; i < data.size(); ++i) {
    for (size_t t = 0; t < data[i].ds.size(); ++t) {
      if (entities.count(data[i].ds[t])) steps.emplace_back(i, t);
    }
  }
  if (steps.empty()) throw std::runtime_error("mean_entity_kl: no entity-expansion steps found");

  Rng rng(seed);
  rng.shuffle(steps);
  if (static_cast<int>(steps.size()) > samples) steps.resize(static_cast<size_t>(samples));

  double total = 0.0;
  const double log_n = std::log(static_cast<double>(params.n_labels + 1));
  for (const auto& [i, t] : steps) {
    Eigen::VectorXd u_b = encode_input(data[i].utterance, vocab, params);
    DerivationSequence prefix(data[i].ds.begin(), data[i].ds.begin() + static_cast<long>(t));
    Eigen::VectorXd p = model_distribution(params, u_b, prefix);
    double kl = log_n;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      if (p[k] > 0.0) kl += p[k] * std::log(p[k]);
    }
    total += kl;
  }
  return total / static_cast<double>(steps.size());
}

namespace {

void dump_matrix(std::string* out, const char* name, const Eigen::MatrixXd& m) {
  *out += std::string("mat ") + name + " " + std::to_string(m.rows()) + " " +
          std::to_string(m.cols()) + "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      *out += (c ? " " : "") + format_double(m(r, c));
    }
    *out += "\n";
  }
}

void dump_vector(std::string* out, const char* name, const Eigen::VectorXd& v) {
  *out += std::string("vec ") + name + " " + std::to_string(v.size()) + "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) *out += (i ? " " : "") + format_double(v[i]);
  *out += "\n";
}

// Whitespace token cursor over the model file.
struct Cursor {
  std::vector<std::string> toks;
  size_t pos = 0;

  explicit Cursor(const std::string& text) {
    std::istringstream ss(text);
    std::string t;
    while (ss >> t) toks.push_back(t);
  }
  const std::string& next() {
    if (pos >= toks.size()) throw std::runtime_error("model file: unexpected end");
    return toks[pos++];
  }
  void expect(const std::string& kw) {
    const std::string& t = next();
    if (t != kw) throw std::runtime_error("model file: expected '" + kw + "', got '" + t + "'");
  }
  long integer() { return parse_long(next()); }
  double number() { return parse_double(next()); }
};

void load_matrix(Cursor* c, const char* name, Eigen::MatrixXd* m) {
  c->expect("mat");
  c->expect(name);
  long rows = c->integer(), cols = c->integer();
  m->resize(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long col = 0; col < cols; ++col) (*m)(r, col) = c->number();
  }
}

void load_vector(Cursor* c, const char* name, Eigen::VectorXd* v) {
  c->expect("vec");
  c->expect(name);
  long n = c->integer();
  v->resize(n);
  for (long i = 0; i < n; ++i) (*v)[i] = c->number();
}

}  // namespace

std::string dump_model(const ScorerParams& p, const NgramVocab& vocab) {
  std::string out = "backdrop-model 1\n";
  out += "dims " + std::to_string(p.dims.embed) + " " + std::to_string(p.dims.rnn) + " " +
         std::to_string(p.dims.proj) + " " + std::to_string(p.dims.head) + "\n";
  out += "labels " + std::to_string(p.n_labels) + "\n";
  out += "unigrams " + std::to_string(vocab.unigrams().size()) + "\n";
  for (const std::string& t : vocab.unigrams().names()) out += t + "\n";
  out += "bigrams " + std::to_string(vocab.bigrams().size()) + "\n";
  for (const std::string& t : vocab.bigrams().names()) out += t + "\n";
  dump_matrix(&out, "w_uni", p.w_uni);
  dump_vector(&out, "b_uni", p.b_uni);
  dump_matrix(&out, "w_bi", p.w_bi);
  dump_vector(&out, "b_bi", p.b_bi);
  dump_matrix(&out, "embed", p.embed);
  dump_matrix(&out, "w_xh", p.w_xh);
  dump_matrix(&out, "w_hh", p.w_hh);
  dump_vector(&out, "b_rnn", p.b_rnn);
  dump_matrix(&out, "w_h1", p.w_h1);
  dump_vector(&out, "b_h1", p.b_h1);
  dump_matrix(&out, "w_h2", p.w_h2);
  dump_vector(&out, "b_h2", p.b_h2);
  return out;
}

void load_model(const std::string& text, ScorerParams* params, NgramVocab* vocab) {
  Cursor c(text);
  c.expect("backdrop-model");
  long version = c.integer();
  if (version != 1) throw std::runtime_error("model file: unsupported version");
  c.expect("dims");
  ScorerDims dims;
  dims.embed = static_cast<int>(c.integer());
  dims.rnn = static_cast<int>(c.integer());
  dims.proj = static_cast<int>(c.integer());
  dims.head = static_cast<int>(c.integer());
  c.expect("labels");
  int n_labels = static_cast<int>(c.integer());

  NgramVocab v;
  c.expect("unigrams");
  long n_uni = c.integer();
  for (long i = 0; i < n_uni; ++i) v.unigrams_.intern(c.next());
  c.expect("bigrams");
  long n_bi = c.integer();
  for (long i = 0; i < n_bi; ++i) {
    std::string a = c.next(), b = c.next();
    v.bigrams_.intern(a + " " + b);
  }

  ScorerParams p = ScorerParams::zeros(dims, v.uni_dim(), v.bi_dim(), n_labels);
  load_matrix(&c, "w_uni", &p.w_uni);
  load_vector(&c, "b_uni", &p.b_uni);
  load_matrix(&c, "w_bi", &p.w_bi);
  load_vector(&c, "b_bi", &p.b_bi);
  load_matrix(&c, "embed", &p.embed);
  load_matrix(&c, "w_xh", &p.w_xh);
  load_matrix(&c, "w_hh", &p.w_hh);
  load_vector(&c, "b_rnn", &p.b_rnn);
  load_matrix(&c, "w_h1", &p.w_h1);
  load_vector(&c, "b_h1", &p.b_h1);
  load_matrix(&c, "w_h2", &p.w_h2);
  load_vector(&c, "b_h2", &p.b_h2);
  if (p.w_uni.cols() != v.uni_dim() || p.w_bi.cols() != v.bi_dim() ||
      p.w_h2.rows() != n_labels + 1) {
    throw std::runtime_error("model file: inconsistent dimensions");
  }

  *params = std::move(p);
  *vocab = std::move(v);
}

void save_model_file(const std::string& path, const ScorerParams& params,
                     const NgramVocab& vocab) {
  write_file(path, dump_model(params, vocab));
}

void load_model_file(const std::string& path, ScorerParams* params, NgramVocab* vocab) {
  load_model(read_file(path), params, vocab);
}

}  // namespace backdrop
