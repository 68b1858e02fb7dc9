#include "backdrop/oracle.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <stdexcept>

namespace backdrop {
namespace oracle {

namespace {

struct Form {
  std::vector<RhsItem> symbols;  // sentential form, leftmost nonterminal expanded next
  double weight;
};

// Epsilon-free grammars: every symbol eventually yields at least one
// terminal, so |symbols| lower-bounds the final length.
bool over_budget(const Form& f, int max_len) {
  return static_cast<int>(f.symbols.size()) > max_len;
}

}  // namespace

std::vector<WeightedString> enumerate_wcfg(const Wcfg& g, int max_len, size_t cap) {
  std::map<DerivationSequence, double> totals;
  if (g.start < 0) return {};

  auto by_lhs = g.rules_by_lhs();
  for (const WcfgRule& r : g.rules) {
    if (r.rhs.empty()) {
      throw std::invalid_argument("enumerate_wcfg: epsilon rules are not supported");
    }
  }

  auto longer = [](const Form& a, const Form& b) { return a.symbols.size() > b.symbols.size(); };
  std::priority_queue<Form, std::vector<Form>, decltype(longer)> queue(longer);
  queue.push(Form{{RhsItem::nonterminal(g.start)}, 1.0});
  size_t expansions = 0;

  while (!queue.empty()) {
    Form f = std::move(const_cast<Form&>(queue.top()));
    queue.pop();
    if (++expansions > cap) {
      throw std::runtime_error("enumerate_wcfg: expansion cap exceeded");
    }

    size_t nt_pos = f.symbols.size();
    for (size_t i = 0; i < f.symbols.size(); ++i) {
      if (f.symbols[i].is_nt()) {
        nt_pos = i;
        break;
      }
    }
    if (nt_pos == f.symbols.size()) {
      DerivationSequence s;
      s.reserve(f.symbols.size());
      for (const RhsItem& item : f.symbols) s.push_back(item.id);
      totals[s] += f.weight;
      continue;
    }

    int nt = f.symbols[nt_pos].id;
    for (int ri : by_lhs[static_cast<size_t>(nt)]) {
      const WcfgRule& r = g.rules[static_cast<size_t>(ri)];
      if (r.weight == 0.0) continue;
      Form nf;
      nf.weight = f.weight * r.weight;
      nf.symbols.reserve(f.symbols.size() + r.rhs.size() - 1);
      nf.symbols.insert(nf.symbols.end(), f.symbols.begin(),
                        f.symbols.begin() + static_cast<long>(nt_pos));
      nf.symbols.insert(nf.symbols.end(), r.rhs.begin(), r.rhs.end());
      nf.symbols.insert(nf.symbols.end(), f.symbols.begin() + static_cast<long>(nt_pos) + 1,
                        f.symbols.end());
      if (!over_budget(nf, max_len)) queue.push(std::move(nf));
    }
  }

  std::vector<WeightedString> out;
  out.reserve(totals.size());
  for (auto& [seq, w] : totals) out.push_back({seq, w});
  return out;
}

BruteConditional brute_conditional(const Wcfg& g, const DerivationSequence& prefix, int max_len) {
  auto strings = enumerate_wcfg(g, max_len);

  BruteConditional out;
  out.probs.assign(static_cast<size_t>(g.terminals.size()), 0.0);

  double enumerated_total = 0.0;
  std::vector<double> ext_mass(static_cast<size_t>(g.terminals.size()), 0.0);
  double end_mass = 0.0;
  for (const WeightedString& ws : strings) {
    enumerated_total += ws.weight;
    if (ws.seq.size() < prefix.size() ||
        !std::equal(prefix.begin(), prefix.end(), ws.seq.begin())) {
      continue;
    }
    out.prefix_mass += ws.weight;
    if (ws.seq.size() == prefix.size()) {
      end_mass += ws.weight;
    } else {
      ext_mass[static_cast<size_t>(ws.seq[prefix.size()])] += ws.weight;
    }
  }
  if (out.prefix_mass <= 0.0) {
    throw ZeroMassError("brute_conditional: no enumerated string extends the prefix");
  }
  out.tail_mass = std::max(0.0, total_mass(g) - enumerated_total);
  out.end_prob = end_mass / out.prefix_mass;
  for (size_t x = 0; x < ext_mass.size(); ++x) {
    out.probs[x] = ext_mass[x] / out.prefix_mass;
  }
  return out;
}

}  // namespace oracle
}  // namespace backdrop
