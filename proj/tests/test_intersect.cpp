#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "backdrop/intersect.hpp"
#include "backdrop/oracle.hpp"
#include "backdrop/util.hpp"
#include "backdrop/wcfg.hpp"
#include "backdrop/wfsa.hpp"
#include "test_util.hpp"

using namespace backdrop;
using namespace backdrop::testutil;

namespace {

std::map<DerivationSequence, double> weight_map(const Wcfg& g, int max_len) {
  std::map<DerivationSequence, double> out;
  for (const auto& ws : oracle::enumerate_wcfg(g, max_len)) out[ws.seq] = ws.weight;
  return out;
}

void check_weight_product_contract(const Wcfg& g, const Wfsa& a, int max_len) {
  Wcfg inter = intersect(g, a);
  auto w_g = weight_map(g, max_len);
  auto w_i = weight_map(inter, max_len);
  for (const auto& [seq, wg] : w_g) {
    double expected = wg * a.string_weight(seq);
    double actual = w_i.count(seq) ? w_i.at(seq) : 0.0;
    CHECK(std::abs(actual - expected) <= 1e-9 * std::max(1.0, expected));
  }
  // Nothing outside the base language shows up.
  for (const auto& [seq, wi] : w_i) {
    CHECK(w_g.count(seq) == 1);
    (void)wi;
  }
}

}  // namespace

TEST_CASE("identity automaton preserves the ds-grammar weights") {
  Cfg g = fig1();
  Wcfg gw0 = build_ds_grammar(g);
  Wcfg inter = intersect(gw0, identity_automaton(gw0.terminals));
  auto w = weight_map(inter, 7);
  CHECK(w.at(ds_of(g, "s0 np0 np1 typenp0 cp0 relnp0 entitynp0")) ==
        doctest::Approx(0.25).epsilon(1e-12));
  check_weight_product_contract(gw0, identity_automaton(gw0.terminals), 11);
}

TEST_CASE("require automaton scales entity-free sequences by eta") {
  Cfg g = fig1();
  Wcfg gw0 = build_ds_grammar(g);
  int entity = *g.syms.labels.id_of("entitynp0");
  Wfsa req = require_automaton(entity, 0.01, gw0.terminals);
  Wcfg inter = intersect(gw0, req);
  auto w = weight_map(inter, 3);
  CHECK(w.at(ds_of(g, "s0 np1 typenp0")) == doctest::Approx(0.005).epsilon(1e-12));
  check_weight_product_contract(gw0, req, 11);
}

TEST_CASE("all-zero automaton annihilates") {
  Cfg g = fig1();
  Wcfg gw0 = build_ds_grammar(g);
  Wfsa zero = unigram_automaton(std::vector<double>(static_cast<size_t>(gw0.terminals.size()), 0.0),
                                gw0.terminals);
  Wcfg inter = intersect(gw0, zero);
  CHECK(total_mass(inter) == 0.0);
  CHECK(oracle::enumerate_wcfg(inter, 10).empty());
}

TEST_CASE("weight-product contract across fixtures and automata") {
  for (const Cfg& g : {fig1(), fig1ext()}) {
    Wcfg gw0 = build_ds_grammar(g);
    int entity = *g.syms.labels.id_of("entitynp0");
    check_weight_product_contract(gw0, penalize_automaton(entity, 0.001, gw0.terminals), 10);
    check_weight_product_contract(gw0, require_automaton(entity, 0.0, gw0.terminals), 10);
    check_weight_product_contract(
        gw0,
        product(require_automaton(entity, 0.01, gw0.terminals),
                require_automaton(*g.syms.labels.id_of("relnp0"), 0.01, gw0.terminals)),
        10);
  }
}

TEST_CASE("contract holds for nondeterministic automata (weights sum over paths)") {
  Cfg g = fig1();
  Wcfg gw0 = build_ds_grammar(g);
  int s0 = *g.syms.labels.id_of("s0");
  // Two parallel ways to consume the first symbol, landing in states with
  // different exit weights.
  std::vector<Wfsa::Transition> trans;
  for (int x = 0; x < gw0.terminals.size(); ++x) {
    trans.push_back({1, x, 1.0, 1});
    trans.push_back({2, x, 0.5, 2});
    if (x == s0) {
      trans.push_back({0, x, 0.3, 1});
      trans.push_back({0, x, 0.7, 2});
    } else {
      trans.push_back({0, x, 1.0, 0});
    }
  }
  Wfsa nd(3, 0, gw0.terminals, std::move(trans), {0.1, 1.0, 0.25});
  CHECK(nd.string_weight({s0}) == doctest::Approx(0.3 * 1.0 + 0.7 * 0.25).epsilon(1e-12));
  check_weight_product_contract(gw0, nd, 11);
}

TEST_CASE("contract holds for rules with terminals beyond position 0") {
  Wcfg g = parse_wcfg(
      "w0: s -> \"a\" s \"b\" @ 0.4\n"
      "w1: s -> \"c\" @ 0.6\n");
  Wfsa req = require_automaton(*g.terminals.id_of("b"), 0.25, g.terminals);
  check_weight_product_contract(g, req, 9);
  Wfsa pen = penalize_automaton(*g.terminals.id_of("a"), 0.5, g.terminals);
  check_weight_product_contract(g, pen, 9);
}

TEST_CASE("critical grammars run out of iterations and say so") {
  // Z = 0.5 Z^2 + 0.5 has the fixed point 1, approached sub-geometrically.
  Wcfg g = parse_wcfg(
      "w0: s -> \"a\" s s @ 0.5\n"
      "w1: s -> \"a\" @ 0.5\n");
  InsideTable inside = inside_weights(g, 1e-12, 200);
  CHECK_FALSE(inside.converged);
  CHECK(inside.iterations == 200);
  REQUIRE(inside.divergent.size() == 1);
  CHECK(g.nonterminals.name(inside.divergent[0]) == "s");
}

TEST_CASE("trim is a fixpoint on the fixture and preserves weights") {
  Cfg g = fig1();
  Wcfg gw0 = build_ds_grammar(g);
  Wcfg trimmed = trim(gw0);
  CHECK(trimmed.rules.size() == gw0.rules.size());
  auto before = weight_map(gw0, 12);
  auto after = weight_map(trimmed, 12);
  REQUIRE(before.size() == after.size());
  for (const auto& [seq, w] : before) {
    CHECK(after.at(seq) == doctest::Approx(w).epsilon(1e-12));
  }
}

TEST_CASE("trim removes orphan and unproductive nonterminals") {
  Wcfg g = parse_wcfg(
      "w0: s -> \"a\" @ 1\n"
      "w1: orphan -> \"b\" @ 1\n"         // unreachable
      "w2: s -> \"a\" dead @ 1\n"         // dead derives nothing
      "w3: dead -> \"c\" dead @ 1\n"
      "w4: s -> \"b\" @ 0\n");            // weight zero
  Wcfg t = trim(g);
  CHECK(t.rules.size() == 1);
  CHECK_FALSE(t.nonterminals.id_of("orphan").has_value());
  CHECK_FALSE(t.nonterminals.id_of("dead").has_value());
}

TEST_CASE("inside weights on the fixture solve Z(np) = 1") {
  Wcfg gw0 = build_ds_grammar(fig1());
  InsideTable inside = inside_weights(gw0, 1e-12);
  REQUIRE(inside.converged);
  CHECK(inside.z[static_cast<size_t>(*gw0.nonterminals.id_of("np"))] ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("acyclic grammars converge in about their depth") {
  Wcfg gw0 = build_ds_grammar(chain_grammar());
  InsideTable inside = inside_weights(gw0);
  CHECK(inside.converged);
  CHECK(inside.iterations <= 4);
}

TEST_CASE("supercritical weights are reported as divergent") {
  Wcfg gw0 = build_ds_grammar(fig1());
  for (WcfgRule& r : gw0.rules) {
    if (!r.rhs[0].is_nt() && gw0.terminals.name(r.rhs[0].id) == "np0") r.weight = 2.0;
  }
  InsideTable inside = inside_weights(gw0);
  CHECK_FALSE(inside.converged);
  CHECK_FALSE(inside.divergent.empty());
  bool np_flagged = false;
  for (int a : inside.divergent) {
    if (gw0.nonterminals.name(a) == "np") np_flagged = true;
  }
  CHECK(np_flagged);
  CHECK_THROWS_AS(total_mass(gw0), std::runtime_error);
  CHECK_THROWS_AS(normalize(gw0), std::runtime_error);
}

TEST_CASE("least fixed point: iterating from above brackets the same values") {
  Cfg g = fig1();
  Wcfg gw0 = build_ds_grammar(g);
  Wcfg inter = intersect(gw0, require_automaton(*g.syms.labels.id_of("entitynp0"), 0.01,
                                                gw0.terminals));
  for (const Wcfg* grammar : {&gw0, &inter}) {
    InsideTable from_below = inside_weights(*grammar);
    InsideTable from_above = inside_weights(*grammar, 1e-12, 10000, 10.0);
    REQUIRE(from_below.converged);
    REQUIRE(from_above.converged);
    for (size_t a = 0; a < from_below.z.size(); ++a) {
      CHECK(std::abs(from_below.z[a] - from_above.z[a]) < 1e-9);
    }
  }
}

TEST_CASE("normalize leaves the already-consistent fixture unchanged") {
  Wcfg gw0 = build_ds_grammar(fig1());
  Pcfg p = normalize(gw0);
  auto before = weight_map(gw0, 12);
  auto after = weight_map(p.g, 12);
  for (const auto& [seq, w] : before) {
    CHECK(after.at(seq) == doctest::Approx(w).epsilon(1e-9));
  }
}

TEST_CASE("normalize rescales the require-intersected fixture by total mass 0.505") {
  Cfg g = fig1();
  Wcfg gw0 = build_ds_grammar(g);
  Wcfg inter = intersect(gw0, require_automaton(*g.syms.labels.id_of("entitynp0"), 0.01,
                                                gw0.terminals));
  CHECK(total_mass(inter) == doctest::Approx(0.505).epsilon(1e-9));

  Pcfg p = normalize(inter);
  CHECK(is_normalized(p.g, 1e-9));
  auto raw = weight_map(inter, 15);
  auto prob = weight_map(p.g, 15);
  for (const auto& [seq, w] : raw) {
    CHECK(prob.at(seq) == doctest::Approx(w / 0.505).epsilon(1e-9));
  }
}

TEST_CASE("normalization preserves weight ratios") {
  Cfg g = fig1ext();
  Wcfg gw0 = build_ds_grammar(g);
  Wcfg inter = intersect(gw0, require_automaton(*g.syms.labels.id_of("entitynp1"), 0.0001,
                                                gw0.terminals));
  Pcfg p = normalize(inter);
  auto raw = weight_map(inter, 11);
  auto prob = weight_map(p.g, 11);
  auto base = raw.begin();
  for (const auto& [seq, w] : raw) {
    if (w == 0.0 || base->second == 0.0) continue;
    double ratio_raw = w / base->second;
    double ratio_prob = prob.at(seq) / prob.at(base->first);
    CHECK(ratio_prob == doctest::Approx(ratio_raw).epsilon(1e-9));
  }
}

TEST_CASE("single-rule grammar normalizes to probability 1") {
  Pcfg p = normalize(build_ds_grammar(hello_grammar()));
  for (const WcfgRule& r : p.g.rules) CHECK(r.weight == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("total mass worked values") {
  Cfg g = fig1();
  Wcfg gw0 = build_ds_grammar(g);
  CHECK(total_mass(gw0) == doctest::Approx(1.0).epsilon(1e-9));
  Wfsa zero = unigram_automaton(std::vector<double>(static_cast<size_t>(gw0.terminals.size()), 0.0),
                                gw0.terminals);
  CHECK(total_mass(intersect(gw0, zero)) == 0.0);
}

TEST_CASE("next-symbol distribution worked values") {
  Cfg g = fig1();
  Pcfg p = normalize(build_ds_grammar(g));
  int s0 = *g.syms.labels.id_of("s0");
  int np0 = *g.syms.labels.id_of("np0");
  int np1 = *g.syms.labels.id_of("np1");

  auto root = next_symbol_distribution(p, {});
  CHECK(root.probs[static_cast<size_t>(s0)] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(root.end_prob == doctest::Approx(0.0).epsilon(1e-12));

  auto after_s0 = next_symbol_distribution(p, {s0});
  CHECK(after_s0.probs[static_cast<size_t>(np0)] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(after_s0.probs[static_cast<size_t>(np1)] == doctest::Approx(0.5).epsilon(1e-9));

  Wcfg gw0 = build_ds_grammar(g);
  Pcfg biased = normalize(
      intersect(gw0, require_automaton(*g.syms.labels.id_of("entitynp0"), 0.01, gw0.terminals)));
  auto cond = next_symbol_distribution(biased, {s0});
  CHECK(cond.probs[static_cast<size_t>(np0)] == doctest::Approx(0.5 / 0.505).epsilon(1e-9));
  CHECK(cond.probs[static_cast<size_t>(np1)] == doctest::Approx(0.005 / 0.505).epsilon(1e-9));
}

TEST_CASE("zero-mass prefixes raise") {
  Cfg g = fig1();
  Pcfg p = normalize(build_ds_grammar(g));
  CHECK_THROWS_AS(next_symbol_distribution(p, ds_of(g, "np1")), ZeroMassError);
}

TEST_CASE("distribution law: sums to one and chains to the sequence probability") {
  Cfg g = fig1ext();
  Wcfg gw0 = build_ds_grammar(g);
  Pcfg p = normalize(
      intersect(gw0, require_automaton(*g.syms.labels.id_of("entitynp1"), 0.01, gw0.terminals)));

  auto probs = weight_map(p.g, 10);
  for (const auto& [seq, target] : probs) {
    double chained = 1.0;
    DerivationSequence prefix;
    for (int x : seq) {
      auto dist = next_symbol_distribution(p, prefix);
      double sum = dist.end_prob;
      for (double q : dist.probs) sum += q;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      chained *= dist.probs[static_cast<size_t>(x)];
      prefix.push_back(x);
    }
    chained *= next_symbol_distribution(p, prefix).end_prob;
    CHECK(chained == doctest::Approx(target).epsilon(1e-8));
  }
}

TEST_CASE("prefix masses are monotone") {
  Cfg g = fig1();
  Wcfg gw0 = build_ds_grammar(g);
  Pcfg p = normalize(gw0);
  for (const DerivationSequence& prefix :
       {ds_of(g, ""), ds_of(g, "s0"), ds_of(g, "s0 np0"), ds_of(g, "s0 np0 np1")}) {
    double whole = total_mass(intersect(p.g, prefix_automaton(prefix, p.g.terminals)));
    for (int x = 0; x < p.g.terminals.size(); ++x) {
      DerivationSequence ext = prefix;
      ext.push_back(x);
      double sub = total_mass(intersect(p.g, prefix_automaton(ext, p.g.terminals)));
      CHECK(sub <= whole + 1e-12);
    }
  }
}

TEST_CASE("engine conditionals agree with the brute-force oracle") {
  Cfg g = fig1ext();
  Wcfg gw0 = build_ds_grammar(g);
  Pcfg p = normalize(
      intersect(gw0, require_automaton(*g.syms.labels.id_of("entitynp0"), 0.01, gw0.terminals)));

  Rng rng(7);
  auto strings = oracle::enumerate_wcfg(p.g, 11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto& ws = strings[rng.index(strings.size())];
    size_t cut = rng.index(ws.seq.size() + 1);
    DerivationSequence prefix(ws.seq.begin(), ws.seq.begin() + static_cast<long>(cut));

    auto engine = next_symbol_distribution(p, prefix);
    auto brute = oracle::brute_conditional(p.g, prefix, 19);
    double bound = brute.tail_mass / brute.prefix_mass + 1e-9;
    CHECK(std::abs(engine.end_prob - brute.end_prob) <= bound);
    for (size_t x = 0; x < engine.probs.size(); ++x) {
      CHECK(std::abs(engine.probs[x] - brute.probs[x]) <= bound);
    }
  }
}
