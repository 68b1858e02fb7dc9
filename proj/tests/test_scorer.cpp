#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "backdrop/scorer.hpp"
#include "test_util.hpp"

using namespace backdrop;
using namespace backdrop::testutil;

namespace {

std::vector<TrainingExample> tiny_corpus(const Cfg& g) {
  return {
      {tokenize("article from 1950"), ds_of(g, "s0 np0 np1 typenp0 cp0 relnp0 entitynp0")},
      {tokenize("any article"), ds_of(g, "s0 np1 typenp0")},
  };
}

Eigen::VectorXd uniform_vec(int n) {
  return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

}  // namespace

TEST_CASE("empty utterance encodes to the biases") {
  Cfg g = fig1();
  NgramVocab vocab = NgramVocab::build(tiny_corpus(g));
  Rng rng(3);
  ScorerParams p = ScorerParams::random_init(ScorerDims{}, vocab.uni_dim(), vocab.bi_dim(),
                                             g.syms.labels.size(), 0.1, rng);
  Eigen::VectorXd u_b = encode_input({}, vocab, p);
  Eigen::VectorXd expected(2 * p.dims.proj);
  expected << p.b_uni, p.b_bi;
  CHECK((u_b - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encoding is deterministic without dropout") {
  Cfg g = fig1();
  NgramVocab vocab = NgramVocab::build(tiny_corpus(g));
  Rng rng(3);
  ScorerParams p = ScorerParams::random_init(ScorerDims{}, vocab.uni_dim(), vocab.bi_dim(),
                                             g.syms.labels.size(), 0.1, rng);
  auto u = tokenize("article from 1950");
  CHECK(encode_input(u, vocab, p) == encode_input(u, vocab, p));
}

TEST_CASE("token permutation only moves the bigram half") {
  Cfg g = fig1();
  std::vector<TrainingExample> corpus = {{tokenize("a b c"), ds_of(g, "s0 np1 typenp0")},
                                         {tokenize("c b a"), ds_of(g, "s0 np1 typenp0")}};
  NgramVocab vocab = NgramVocab::build(corpus);
  Rng rng(5);
  ScorerParams p = ScorerParams::random_init(ScorerDims{}, vocab.uni_dim(), vocab.bi_dim(),
                                             g.syms.labels.size(), 0.1, rng);
  Eigen::VectorXd fwd = encode_input(tokenize("a b c"), vocab, p);
  Eigen::VectorXd rev = encode_input(tokenize("c b a"), vocab, p);
  CHECK((fwd.head(p.dims.proj) - rev.head(p.dims.proj)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((fwd.tail(p.dims.proj) - rev.tail(p.dims.proj)).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("zero parameters give the uniform distribution") {
  Cfg g = fig1();
  NgramVocab vocab = NgramVocab::build(tiny_corpus(g));
  ScorerParams p =
      ScorerParams::zeros(ScorerDims{}, vocab.uni_dim(), vocab.bi_dim(), g.syms.labels.size());
  Eigen::VectorXd u_b = encode_input(tokenize("article from 1950"), vocab, p);
  Eigen::VectorXd dist = model_distribution(p, u_b, ds_of(g, "s0 np0"));
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    CHECK(dist[i] == doctest::Approx(1.0 / (g.syms.labels.size() + 1)).epsilon(1e-12));
  }
}

TEST_CASE("model distribution matches a hand-rolled forward pass") {
  Cfg g = fig1();
  NgramVocab vocab = NgramVocab::build(tiny_corpus(g));
  ScorerDims dims{2, 3, 2, 3};  // embed, rnn, proj, head
  Rng rng(11);
  ScorerParams p = ScorerParams::random_init(dims, vocab.uni_dim(), vocab.bi_dim(),
                                             g.syms.labels.size(), 0.3, rng);
  auto utterance = tokenize("article from 1950");
  DerivationSequence prefix = ds_of(g, "s0 np0");

  Eigen::VectorXd u_b = encode_input(utterance, vocab, p);
  Eigen::VectorXd got = model_distribution(p, u_b, prefix);

  // Independent scalar-loop reimplementation.
  const int L = g.syms.labels.size();
  std::vector<double> ub(static_cast<size_t>(2 * dims.proj), 0.0);
  {
    std::vector<double> bag_uni(static_cast<size_t>(vocab.uni_dim()), 0.0);
    std::vector<double> bag_bi(static_cast<size_t>(vocab.bi_dim()), 0.0);
    for (const auto& tok : utterance) bag_uni[static_cast<size_t>(vocab.uni_id(tok))] += 1;
    for (size_t i = 0; i + 1 < utterance.size(); ++i) {
      bag_bi[static_cast<size_t>(vocab.bi_id(utterance[i], utterance[i + 1]))] += 1;
    }
    for (int r = 0; r < dims.proj; ++r) {
      double acc = p.b_uni[r];
      for (int c = 0; c < vocab.uni_dim(); ++c) acc += p.w_uni(r, c) * bag_uni[static_cast<size_t>(c)];
      ub[static_cast<size_t>(r)] = acc;
      acc = p.b_bi[r];
      for (int c = 0; c < vocab.bi_dim(); ++c) acc += p.w_bi(r, c) * bag_bi[static_cast<size_t>(c)];
      ub[static_cast<size_t>(dims.proj + r)] = acc;
    }
  }
  std::vector<double> h(static_cast<size_t>(dims.rnn), 0.0);
  for (int label : prefix) {
    std::vector<double> next_h(static_cast<size_t>(dims.rnn), 0.0);
    for (int r = 0; r < dims.rnn; ++r) {
      double acc = p.b_rnn[r];
      for (int c = 0; c < dims.embed; ++c) acc += p.w_xh(r, c) * p.embed(c, label);
      for (int c = 0; c < dims.rnn; ++c) acc += p.w_hh(r, c) * h[static_cast<size_t>(c)];
      next_h[static_cast<size_t>(r)] = std::tanh(acc);
    }
    h = next_h;
  }
  std::vector<double> z;
  for (int r = 0; r < dims.rnn; ++r) z.push_back(h[static_cast<size_t>(r)]);
  for (int r = 0; r < 2 * dims.proj; ++r) z.push_back(ub[static_cast<size_t>(r)]);
  std::vector<double> hid(static_cast<size_t>(dims.head), 0.0);
  for (int r = 0; r < dims.head; ++r) {
    double acc = p.b_h1[r];
    for (size_t c = 0; c < z.size(); ++c) acc += p.w_h1(r, static_cast<Eigen::Index>(c)) * z[c];
    hid[static_cast<size_t>(r)] = std::tanh(acc);
  }
  std::vector<double> logits(static_cast<size_t>(L + 1), 0.0);
  double zmax = -1e300;
  for (int r = 0; r <= L; ++r) {
    double acc = p.b_h2[r];
    for (int c = 0; c < dims.head; ++c) acc += p.w_h2(r, c) * hid[static_cast<size_t>(c)];
    logits[static_cast<size_t>(r)] = acc;
    zmax = std::max(zmax, acc);
  }
  double zsum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - zmax);
    zsum += v;
  }
  for (int r = 0; r <= L; ++r) {
    CHECK(got[r] == doctest::Approx(logits[static_cast<size_t>(r)] / zsum).epsilon(1e-12));
  }
}

TEST_CASE("combined distribution extremes and worked value") {
  Eigen::VectorXd m(3);
  m << 0.6, 0.3, 0.1;
  Eigen::VectorXd uniform = uniform_vec(3);

  Eigen::VectorXd back_to_model = combined_distribution(m, uniform);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(back_to_model[i] - m[i]) < 1e-12);

  Eigen::VectorXd b(3);
  b << 0.9, 0.1, 0.0;
  Eigen::VectorXd back_to_bg = combined_distribution(uniform, b);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(back_to_bg[i] - b[i]) < 1e-12);
  CHECK(back_to_bg[2] == 0.0);

  CHECK_THROWS_AS(combined_distribution(m, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("adding a constant to all logits leaves the combined distribution unchanged") {
  Cfg g = fig1();
  NgramVocab vocab = NgramVocab::build(tiny_corpus(g));
  Rng rng(17);
  ScorerParams p = ScorerParams::random_init(ScorerDims{}, vocab.uni_dim(), vocab.bi_dim(),
                                             g.syms.labels.size(), 0.2, rng);
  ScorerParams shifted = p;
  shifted.b_h2.array() += 3.7;

  Eigen::VectorXd b(g.syms.labels.size() + 1);
  b.setZero();
  b[*g.syms.labels.id_of("np0")] = 0.7;
  b[*g.syms.labels.id_of("np1")] = 0.3;

  Eigen::VectorXd u_b = encode_input(tokenize("article from 1950"), vocab, p);
  Eigen::VectorXd u_b2 = encode_input(tokenize("article from 1950"), vocab, shifted);
  Eigen::VectorXd p1 = combined_distribution(model_distribution(p, u_b, ds_of(g, "s0")), b);
  Eigen::VectorXd p2 = combined_distribution(model_distribution(shifted, u_b2, ds_of(g, "s0")), b);
  CHECK((p1 - p2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("with a uniform model the loss is the background's own cross-entropy") {
  Cfg g = fig1();
  NgramVocab vocab = NgramVocab::build(tiny_corpus(g));
  ScorerParams zero =
      ScorerParams::zeros(ScorerDims{}, vocab.uni_dim(), vocab.bi_dim(), g.syms.labels.size());
  EntityLexicon lex = build_lexicon(g);
  AliasTable aliases;
  TrainingExample ex = tiny_corpus(g)[0];
  Background bg = build_background(g, ex.utterance, lex, aliases, PriorConfig{0.01});

  double expected = 0.0;
  DerivationSequence prefix;
  for (size_t t = 0; t <= ex.ds.size(); ++t) {
    auto dist = background_conditional(bg, prefix);
    double q = t < ex.ds.size() ? dist.probs[static_cast<size_t>(ex.ds[t])] : dist.end_prob;
    expected += -std::log(q);
    if (t < ex.ds.size()) prefix.push_back(ex.ds[t]);
  }
  CHECK(sequence_loss(ex, zero, bg, vocab) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(sequence_loss(ex, zero, bg, vocab) >= 0.0);
}

TEST_CASE("deterministic grammar: one-hot background makes the loss zero and the gradient zero") {
  Cfg g = chain_grammar();
  std::vector<TrainingExample> corpus = {{tokenize("x y"), ds_of(g, "s0 a0 b0")}};
  NgramVocab vocab = NgramVocab::build(corpus);
  ScorerParams zero =
      ScorerParams::zeros(ScorerDims{}, vocab.uni_dim(), vocab.bi_dim(), g.syms.labels.size());
  Background bg = build_background(g, corpus[0].utterance, EntityLexicon{}, AliasTable{},
                                   PriorConfig{});
  CHECK(sequence_loss(corpus[0], zero, bg, vocab) == doctest::Approx(0.0).epsilon(1e-12));

  double loss = 0.0;
  ScorerParams grads = grad(corpus[0], zero, bg, vocab, &loss);
  CHECK(loss == doctest::Approx(0.0).epsilon(1e-12));
  for (size_t i = 0; i < grads.size(); ++i) CHECK(grads.coeff(i) == 0.0);
}

TEST_CASE("head-bias gradient has the closed softmax form at zero parameters") {
  Cfg g = fig1();
  NgramVocab vocab = NgramVocab::build(tiny_corpus(g));
  ScorerParams zero =
      ScorerParams::zeros(ScorerDims{}, vocab.uni_dim(), vocab.bi_dim(), g.syms.labels.size());
  EntityLexicon lex = build_lexicon(g);
  AliasTable aliases;
  TrainingExample ex = tiny_corpus(g)[1];  // s0 np1 typenp0
  Background bg = build_background(g, ex.utterance, lex, aliases, PriorConfig{});

  // With a uniform model the combined distribution equals the background, so
  // d loss / d b_h2 = sum_t (bg_t - onehot(gold_t)).
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(g.syms.labels.size() + 1);
  DerivationSequence prefix;
  for (size_t t = 0; t <= ex.ds.size(); ++t) {
    expected += bg_vector(background_conditional(bg, prefix));
    int gold = t < ex.ds.size() ? ex.ds[t] : g.syms.labels.size();
    expected[gold] -= 1.0;
    if (t < ex.ds.size()) prefix.push_back(ex.ds[t]);
  }
  ScorerParams grads = grad(ex, zero, bg, vocab);
  CHECK((grads.b_h2 - expected).cwiseAbs().maxCoeff() < 1e-12);
}

namespace {

void finite_difference_check(const Cfg& g, const TrainingExample& ex, const Background& bg,
                             const NgramVocab& vocab, ScorerParams params, int n_coords,
                             uint64_t seed) {
  double loss = 0.0;
  ScorerParams analytic = grad(ex, params, bg, vocab, &loss);
  REQUIRE(std::isfinite(loss));

  Rng rng(seed);
  const double eps = 1e-4;
  double worst = 0.0;
  for (int k = 0; k < n_coords; ++k) {
    size_t i = rng.index(params.size());
    double saved = params.coeff(i);
    params.coeff(i) = saved + eps;
    double up = sequence_loss(ex, params, bg, vocab);
    params.coeff(i) = saved - eps;
    double down = sequence_loss(ex, params, bg, vocab);
    params.coeff(i) = saved;
    double fd = (up - down) / (2 * eps);
    double rel = std::abs(analytic.coeff(i) - fd) /
                 std::max({std::abs(analytic.coeff(i)), std::abs(fd), 1e-6});
    worst = std::max(worst, rel);
  }
  CHECK(worst < 1e-3);
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences") {
  Cfg g = fig1ext();
  std::vector<TrainingExample> corpus = {
      {tokenize("article titled 1984"), ds_of(g, "s0 np0 np1 typenp0 cp0 relnp1 entitynp1")}};
  NgramVocab vocab = NgramVocab::build(corpus);
  Rng rng(23);
  ScorerParams params = ScorerParams::random_init(ScorerDims{}, vocab.uni_dim(), vocab.bi_dim(),
                                                  g.syms.labels.size(), 0.2, rng);
  EntityLexicon lex = build_lexicon(g);
  AliasTable aliases;

  SUBCASE("with an entity-aware background") {
    Background bg = build_background(g, corpus[0].utterance, lex, aliases, PriorConfig{0.01});
    REQUIRE(bg.detected().size() == 1);
    finite_difference_check(g, corpus[0], bg, vocab, params, 120, 31);
  }
  SUBCASE("with the input-independent background") {
    Background bg = build_background(g, corpus[0].utterance, EntityLexicon{}, aliases,
                                     PriorConfig{0.01});
    finite_difference_check(g, corpus[0], bg, vocab, params, 120, 37);
  }
}

TEST_CASE("zero background probability on the gold symbol is reported") {
  Cfg g = fig1();
  NgramVocab vocab = NgramVocab::build(tiny_corpus(g));
  ScorerParams zero =
      ScorerParams::zeros(ScorerDims{}, vocab.uni_dim(), vocab.bi_dim(), g.syms.labels.size());
  EntityLexicon lex = build_lexicon(g);
  AliasTable aliases;
  // eta = 0 on an utterance with "1950" kills every sequence missing the
  // entity; the short gold sequence below has background probability 0.
  TrainingExample ex{tokenize("in 1950"), ds_of(g, "s0 np1 typenp0")};
  Background bg = build_background(g, ex.utterance, lex, aliases, PriorConfig{0.0});
  CHECK_THROWS_WITH_AS(sequence_loss(ex, zero, bg, vocab),
                       doctest::Contains("zero background probability"), std::runtime_error);
}

TEST_CASE("training memorizes a single example") {
  Cfg g = fig1ext();
  std::vector<TrainingExample> corpus = {
      {tokenize("article titled 1984"), ds_of(g, "s0 np0 np1 typenp0 cp0 relnp1 entitynp1")}};
  NgramVocab vocab = NgramVocab::build(corpus);
  EntityLexicon lex = build_lexicon(g);
  AliasTable aliases;
  TrainConfig cfg;
  cfg.epochs = 150;
  TrainReport report;
  ScorerParams params =
      train(corpus, g, lex, aliases, cfg, PriorConfig{0.01}, true, vocab, nullptr, &report);

  REQUIRE(report.epoch_losses.size() == 150);
  CHECK(report.epoch_losses.back() <= report.epoch_losses.front());
  CHECK(report.epoch_losses.back() < 0.1);  // nats per step
  CHECK(params.all_finite());
}

TEST_CASE("training is deterministic given the seed") {
  Cfg g = fig1ext();
  std::vector<TrainingExample> corpus = {
      {tokenize("article titled 1984"), ds_of(g, "s0 np0 np1 typenp0 cp0 relnp1 entitynp1")},
      {tokenize("any article"), ds_of(g, "s0 np1 typenp0")}};
  NgramVocab vocab = NgramVocab::build(corpus);
  EntityLexicon lex = build_lexicon(g);
  AliasTable aliases;
  TrainConfig cfg;
  cfg.epochs = 5;

  ScorerParams a = train(corpus, g, lex, aliases, cfg, PriorConfig{0.01}, true, vocab);
  ScorerParams b = train(corpus, g, lex, aliases, cfg, PriorConfig{0.01}, true, vocab);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a.coeff(i) == b.coeff(i));
}

TEST_CASE("model save/load round-trips bit-exactly") {
  Cfg g = fig1ext();
  auto corpus = tiny_corpus(fig1());
  NgramVocab vocab = NgramVocab::build(corpus);
  Rng rng(41);
  ScorerParams p = ScorerParams::random_init(ScorerDims{}, vocab.uni_dim(), vocab.bi_dim(),
                                             g.syms.labels.size(), 0.2, rng);
  std::string d1 = dump_model(p, vocab);
  ScorerParams q;
  NgramVocab vocab2;
  load_model(d1, &q, &vocab2);
  CHECK(dump_model(q, vocab2) == d1);
  REQUIRE(q.size() == p.size());
  for (size_t i = 0; i < p.size(); ++i) CHECK(p.coeff(i) == q.coeff(i));
  CHECK(vocab2.unigrams().names() == vocab.unigrams().names());
  CHECK(vocab2.bigrams().names() == vocab.bigrams().names());
}
