#include "backdrop/intersect.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace backdrop {

namespace {
constexpr double kDivergenceGuard = 1e12;
}

InsideTable inside_weights(const Wcfg& g, double tol, int max_iter, std::optional<double> init) {
  const size_t n = static_cast<size_t>(g.nonterminals.size());
  InsideTable table;
  table.z.assign(n, init.value_or(0.0));

  std::vector<double> next(n, 0.0);
  for (int iter = 1; iter <= max_iter; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (const WcfgRule& r : g.rules) {
      double w = r.weight;
      for (const RhsItem& item : r.rhs) {
        if (item.is_nt()) w *= table.z[static_cast<size_t>(item.id)];
      }
      next[static_cast<size_t>(r.lhs)] += w;
    }
    double residual = 0.0;
    for (size_t a = 0; a < n; ++a) {
      residual = std::max(residual, std::abs(next[a] - table.z[a]));
    }
    table.z.swap(next);
    table.iterations = iter;

    bool blown = false;
    for (size_t a = 0; a < n; ++a) {
      if (table.z[a] > kDivergenceGuard || !std::isfinite(table.z[a])) {
        table.divergent.push_back(static_cast<int>(a));
        blown = true;
      }
    }
    if (blown) return table;
    if (residual < tol) {
      table.converged = true;
      return table;
    }
  }
  // Ran out of iterations: report the nonterminals that were still moving.
  std::vector<double> last(table.z);
  std::fill(next.begin(), next.end(), 0.0);
  for (const WcfgRule& r : g.rules) {
    double w = r.weight;
    for (const RhsItem& item : r.rhs) {
      if (item.is_nt()) w *= last[static_cast<size_t>(item.id)];
    }
    next[static_cast<size_t>(r.lhs)] += w;
  }
  for (size_t a = 0; a < n; ++a) {
    if (std::abs(next[a] - last[a]) >= tol) table.divergent.push_back(static_cast<int>(a));
  }
  return table;
}

Wcfg trim(const Wcfg& g) {
  const size_t n = static_cast<size_t>(g.nonterminals.size());

  // Productive nonterminals, ignoring weight-0 rules.
  std::vector<bool> productive(n, false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const WcfgRule& r : g.rules) {
      if (r.weight == 0.0 || productive[static_cast<size_t>(r.lhs)]) continue;
      bool ok = true;
      for (const RhsItem& item : r.rhs) {
        if (item.is_nt() && !productive[static_cast<size_t>(item.id)]) {
          ok = false;
          break;
        }
      }
      if (ok) {
        productive[static_cast<size_t>(r.lhs)] = true;
        changed = true;
      }
    }
  }

  auto rule_kept = [&](const WcfgRule& r) {
    if (r.weight == 0.0) return false;
    for (const RhsItem& item : r.rhs) {
      if (item.is_nt() && !productive[static_cast<size_t>(item.id)]) return false;
    }
    return true;
  };

  // Reachability from start through kept rules.
  std::vector<bool> reachable(n, false);
  if (g.start >= 0) {
    std::vector<int> work{g.start};
    reachable[static_cast<size_t>(g.start)] = true;
    auto by_lhs = g.rules_by_lhs();
    while (!work.empty()) {
      int a = work.back();
      work.pop_back();
      for (int ri : by_lhs[static_cast<size_t>(a)]) {
        const WcfgRule& r = g.rules[static_cast<size_t>(ri)];
        if (!rule_kept(r)) continue;
        for (const RhsItem& item : r.rhs) {
          if (item.is_nt() && !reachable[static_cast<size_t>(item.id)]) {
            reachable[static_cast<size_t>(item.id)] = true;
            work.push_back(item.id);
          }
        }
      }
    }
  }

  Wcfg out;
  out.terminals = g.terminals;
  std::vector<int> remap(n, -1);
  for (size_t a = 0; a < n; ++a) {
    bool keep = reachable[a] && productive[a];
    if (static_cast<int>(a) == g.start) keep = true;  // zero-mass grammars stay well-formed
    if (keep) remap[a] = out.nonterminals.intern(g.nonterminals.name(static_cast<int>(a)));
  }
  out.start = g.start >= 0 ? remap[static_cast<size_t>(g.start)] : -1;
  for (const WcfgRule& r : g.rules) {
    if (!rule_kept(r) || !reachable[static_cast<size_t>(r.lhs)] ||
        !productive[static_cast<size_t>(r.lhs)]) {
      continue;
    }
    WcfgRule nr;
    nr.lhs = remap[static_cast<size_t>(r.lhs)];
    nr.weight = r.weight;
    for (const RhsItem& item : r.rhs) {
      nr.rhs.push_back(item.is_nt() ? RhsItem::nonterminal(remap[static_cast<size_t>(item.id)])
                                    : item);
    }
    out.rules.push_back(std::move(nr));
  }
  return out;
}

namespace {

// Per-nonterminal boolean span matrix over automaton state pairs.
class SpanSet {
 public:
  SpanSet(size_t num_nts, size_t num_states)
      : num_states_(num_states), bits_(num_nts * num_states * num_states, false) {}

  bool get(int nt, int q, int r) const { return bits_[idx(nt, q, r)]; }
  // Returns true if newly set.
  bool set(int nt, int q, int r) {
    auto i = idx(nt, q, r);
    if (bits_[i]) return false;
    bits_[i] = true;
    return true;
  }

 private:
  size_t idx(int nt, int q, int r) const {
    return (static_cast<size_t>(nt) * num_states_ + static_cast<size_t>(q)) * num_states_ +
           static_cast<size_t>(r);
  }
  size_t num_states_;
  std::vector<bool> bits_;
};

}  // namespace

Wcfg intersect(const Wcfg& g, const Wfsa& a) {
  // The automaton alphabet must be exactly the grammar's terminal set; ids
  // may differ, so map by name.
  const int nterm = g.terminals.size();
  if (a.alphabet().size() != nterm) {
    throw std::invalid_argument("intersect: alphabet mismatch (different sizes)");
  }
  std::vector<int> sym_of(static_cast<size_t>(nterm), -1);
  for (int t = 0; t < nterm; ++t) {
    auto s = a.alphabet().id_of(g.terminals.name(t));
    if (!s) {
      throw std::invalid_argument("intersect: terminal '" + g.terminals.name(t) +
                                  "' missing from automaton alphabet");
    }
    sym_of[static_cast<size_t>(t)] = *s;
  }

  const int nq = a.num_states();
  const int nnt = g.nonterminals.size();
  auto by_lhs = g.rules_by_lhs();

  // Productive spans: (q, A, r) is kept only if A can derive some string
  // taking the automaton from q to r. Computed as a fixpoint before any rule
  // is materialized, which keeps the triple construction near its trimmed
  // size.
  SpanSet spans(static_cast<size_t>(nnt), static_cast<size_t>(nq));
  std::vector<std::vector<std::vector<int>>> nt_ends(
      static_cast<size_t>(nnt),
      std::vector<std::vector<int>>(static_cast<size_t>(nq)));  // nt, q -> list of r

  bool changed = true;
  std::vector<bool> cur(static_cast<size_t>(nq)), nxt(static_cast<size_t>(nq));
  while (changed) {
    changed = false;
    for (const WcfgRule& r : g.rules) {
      if (r.weight == 0.0) continue;
      for (int q0 = 0; q0 < nq; ++q0) {
        std::fill(cur.begin(), cur.end(), false);
        cur[static_cast<size_t>(q0)] = true;
        for (const RhsItem& item : r.rhs) {
          std::fill(nxt.begin(), nxt.end(), false);
          bool any = false;
          for (int q = 0; q < nq; ++q) {
            if (!cur[static_cast<size_t>(q)]) continue;
            if (item.is_nt()) {
              for (int e : nt_ends[static_cast<size_t>(item.id)][static_cast<size_t>(q)]) {
                nxt[static_cast<size_t>(e)] = true;
                any = true;
              }
            } else {
              for (const auto& [to, w] : a.arcs(q, sym_of[static_cast<size_t>(item.id)])) {
                (void)w;
                nxt[static_cast<size_t>(to)] = true;
                any = true;
              }
            }
          }
          cur.swap(nxt);
          if (!any) break;
        }
        for (int qm = 0; qm < nq; ++qm) {
          if (cur[static_cast<size_t>(qm)] && spans.set(r.lhs, q0, qm)) {
            nt_ends[static_cast<size_t>(r.lhs)][static_cast<size_t>(q0)].push_back(qm);
            changed = true;
          }
        }
      }
    }
  }

  Wcfg out;
  out.terminals = g.terminals;
  auto triple_name = [&](int nt, int q, int r) {
    return g.nonterminals.name(nt) + "." + std::to_string(q) + "." + std::to_string(r);
  };
  // Fresh start first so its id is 0.
  std::string start_name = g.nonterminals.name(g.start) + "'";
  out.start = out.nonterminals.intern(start_name);

  std::map<std::pair<int, std::vector<RhsItem>>, double> merged;

  // Enumerate rule instantiations over productive spans only, walking the
  // right-hand side left to right and accumulating transition weights.
  std::vector<RhsItem> items;
  for (const WcfgRule& r : g.rules) {
    if (r.weight == 0.0) continue;
    for (int q0 = 0; q0 < nq; ++q0) {
      items.clear();
      auto dfs = [&](auto&& self, size_t pos, int q, double w) -> void {
        if (pos == r.rhs.size()) {
          // The span fixpoint already covers every walk that gets here.
          int lhs = out.nonterminals.intern(triple_name(r.lhs, q0, q));
          merged[{lhs, items}] += w;
          return;
        }
        const RhsItem& item = r.rhs[pos];
        if (item.is_nt()) {
          for (int e : nt_ends[static_cast<size_t>(item.id)][static_cast<size_t>(q)]) {
            items.push_back(
                RhsItem::nonterminal(out.nonterminals.intern(triple_name(item.id, q, e))));
            self(self, pos + 1, e, w);
            items.pop_back();
          }
        } else {
          for (const auto& [to, tw] : a.arcs(q, sym_of[static_cast<size_t>(item.id)])) {
            items.push_back(item);
            self(self, pos + 1, to, w * tw);
            items.pop_back();
          }
        }
      };
      dfs(dfs, 0, q0, r.weight);
    }
  }

  // Close off through exit weights: S' -> (q_init, S, r) weighted by exit(r).
  for (int r = 0; r < nq; ++r) {
    if (a.exit(r) == 0.0) continue;
    if (!spans.get(g.start, a.initial(), r)) continue;
    int nt = out.nonterminals.intern(triple_name(g.start, a.initial(), r));
    merged[{out.start, {RhsItem::nonterminal(nt)}}] += a.exit(r);
  }

  for (auto& [key, w] : merged) {
    out.rules.push_back(WcfgRule{key.first, key.second, w});
  }
  return trim(out);
}

Pcfg normalize(const Wcfg& g) {
  Wcfg gt = trim(g);
  InsideTable inside = inside_weights(gt);
  if (!inside.converged) {
    std::string msg = "normalize: inside weights did not converge;";
    for (int a : inside.divergent) msg += " " + gt.nonterminals.name(a);
    throw std::runtime_error(msg);
  }
  if (gt.start < 0 || inside.z[static_cast<size_t>(gt.start)] <= 0.0) {
    throw std::runtime_error("normalize: zero partition function (empty language)");
  }

  Wcfg out;
  out.nonterminals = gt.nonterminals;
  out.terminals = gt.terminals;
  out.start = gt.start;
  for (const WcfgRule& r : gt.rules) {
    double w = r.weight;
    for (const RhsItem& item : r.rhs) {
      if (item.is_nt()) w *= inside.z[static_cast<size_t>(item.id)];
    }
    out.rules.push_back(WcfgRule{r.lhs, r.rhs, w / inside.z[static_cast<size_t>(r.lhs)]});
  }
  return Pcfg::from_wcfg(std::move(out));
}

double total_mass(const Wcfg& g) {
  if (g.start < 0) return 0.0;
  InsideTable inside = inside_weights(g);
  if (!inside.converged) {
    std::string msg = "total_mass: inside weights did not converge;";
    for (int a : inside.divergent) msg += " " + g.nonterminals.name(a);
    throw std::runtime_error(msg);
  }
  return inside.z[static_cast<size_t>(g.start)];
}

NextSymbolDistribution next_symbol_distribution(const Pcfg& pg, const DerivationSequence& prefix) {
  const Wcfg& g = pg.g;
  const int nterm = g.terminals.size();

  double denom = total_mass(intersect(g, prefix_automaton(prefix, g.terminals)));
  if (denom <= 0.0) {
    throw ZeroMassError("next_symbol_distribution: prefix has zero mass");
  }

  NextSymbolDistribution dist;
  dist.probs.assign(static_cast<size_t>(nterm), 0.0);
  dist.end_prob =
      total_mass(intersect(g, prefix_automaton(prefix, g.terminals, /*exact=*/true))) / denom;

  // Terminals that no rule mentions cannot extend anything.
  std::vector<bool> used(static_cast<size_t>(nterm), false);
  for (const WcfgRule& r : g.rules) {
    for (const RhsItem& item : r.rhs) {
      if (!item.is_nt()) used[static_cast<size_t>(item.id)] = true;
    }
  }

  DerivationSequence extended(prefix);
  extended.push_back(0);
  for (int x = 0; x < nterm; ++x) {
    if (!used[static_cast<size_t>(x)]) continue;
    extended.back() = x;
    dist.probs[static_cast<size_t>(x)] =
        total_mass(intersect(g, prefix_automaton(extended, g.terminals))) / denom;
  }
  return dist;
}

}  // namespace backdrop
