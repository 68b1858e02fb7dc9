#include "backdrop/decode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace backdrop {

namespace {

struct SearchNode {
  DerivationSequence prefix;
  std::vector<int> rank;  // prefix mapped through label-name ranks, for ties
  double cost;
  bool complete;
};

struct NodeOrder {
  // priority_queue pops the *largest*; invert so the cheapest (then
  // lexicographically smallest) node pops first. Complete nodes rank after
  // their own prefix via a sentinel.
  bool operator()(const SearchNode& a, const SearchNode& b) const {
    if (a.cost != b.cost) return a.cost > b.cost;
    return a.rank > b.rank;
  }
};

}  // namespace

DecodeResult decode(const ScorerParams& params, const Background& bg,
                    const std::vector<std::string>& utterance, const NgramVocab& vocab,
                    const Cfg& g, size_t budget) {
  const int n_labels = g.syms.labels.size();
  if (params.n_labels != n_labels) {
    throw std::invalid_argument("decode: model was trained against a different label set");
  }

  // Lexicographic tie-breaking is over label names, not intern order.
  std::vector<int> name_rank(static_cast<size_t>(n_labels));
  {
    std::vector<int> ids(static_cast<size_t>(n_labels));
    std::iota(ids.begin(), ids.end(), 0);
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
      return g.syms.labels.name(a) < g.syms.labels.name(b);
    });
    for (size_t i = 0; i < ids.size(); ++i) name_rank[static_cast<size_t>(ids[i])] = static_cast<int>(i);
  }

  Eigen::VectorXd u_b = encode_input(utterance, vocab, params);

  std::priority_queue<SearchNode, std::vector<SearchNode>, NodeOrder> queue;
  queue.push(SearchNode{{}, {}, 0.0, false});
  size_t expansions = 0;

  while (!queue.empty()) {
    SearchNode node = queue.top();
    queue.pop();
    if (node.complete) {
      return DecodeResult{node.prefix, node.cost, expansions};
    }
    if (++expansions > budget) {
      throw BudgetError("decode: budget of " + std::to_string(budget) +
                        " expansions exhausted before any complete sequence");
    }

    Eigen::VectorXd bgv = bg_vector(bg.conditional(node.prefix));
    Eigen::VectorXd model = model_distribution(params, u_b, node.prefix);
    Eigen::VectorXd p = combined_distribution(model, bgv);

    for (int x = 0; x < n_labels; ++x) {
      if (p[x] <= 0.0) continue;
      SearchNode child;
      child.prefix = node.prefix;
      child.prefix.push_back(x);
      child.rank = node.rank;
      child.rank.push_back(name_rank[static_cast<size_t>(x)]);
      child.cost = node.cost - std::log(p[x]);
      child.complete = false;
      queue.push(std::move(child));
    }
    if (p[n_labels] > 0.0) {
      SearchNode goal;
      goal.prefix = node.prefix;
      goal.rank = node.rank;
      goal.rank.push_back(n_labels);  // sentinel: END sorts after every label
      goal.cost = node.cost - std::log(p[n_labels]);
      goal.complete = true;
      queue.push(std::move(goal));
    }
  }
  throw BudgetError("decode: search space exhausted without a complete sequence");
}

EvalReport evaluate(const std::vector<TrainingExample>& data, const ScorerParams& params,
                    const NgramVocab& vocab, const Cfg& g, const EntityLexicon& lex,
                    const AliasTable& aliases, const PriorConfig& prior, bool use_background,
                    size_t budget, GwCache* cache) {
  GwCache local(g);
  if (!cache) cache = &local;
  const EntityLexicon no_lex;

  EvalReport report;
  for (const TrainingExample& ex : data) {
    EvalOutcome out;
    out.utterance = ex.utterance;
    out.gold_lf = compose_lf(parse_ds(ex.ds, g), g);
    Background bg =
        build_background(g, ex.utterance, use_background ? lex : no_lex, aliases, prior, cache);
    try {
      DecodeResult res = decode(params, bg, ex.utterance, vocab, g, budget);
      out.predicted_ds = res.ds;
      out.predicted_lf = compose_lf(parse_ds(res.ds, g), g);
      out.correct = out.predicted_lf == out.gold_lf;
    } catch (const BudgetError&) {
      out.decode_failed = true;
    }
    report.total += 1;
    report.correct += out.correct ? 1 : 0;
    report.outcomes.push_back(std::move(out));
  }
  return report;
}

}  // namespace backdrop
