#include "backdrop/wcfg.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "backdrop/util.hpp"

namespace backdrop {

std::vector<std::vector<int>> Wcfg::rules_by_lhs() const {
  std::vector<std::vector<int>> by_lhs(static_cast<size_t>(nonterminals.size()));
  for (size_t i = 0; i < rules.size(); ++i) {
    by_lhs[static_cast<size_t>(rules[i].lhs)].push_back(static_cast<int>(i));
  }
  return by_lhs;
}

bool is_normalized(const Wcfg& g, double tol) {
  std::vector<double> sums(static_cast<size_t>(g.nonterminals.size()), 0.0);
  std::vector<bool> has_rule(static_cast<size_t>(g.nonterminals.size()), false);
  for (const WcfgRule& r : g.rules) {
    sums[static_cast<size_t>(r.lhs)] += r.weight;
    has_rule[static_cast<size_t>(r.lhs)] = true;
  }
  for (size_t a = 0; a < sums.size(); ++a) {
    if (has_rule[a] && std::abs(sums[a] - 1.0) > tol) return false;
  }
  return true;
}

Pcfg Pcfg::from_wcfg(Wcfg g) {
  if (!is_normalized(g)) {
    throw std::invalid_argument("grammar is not probabilistic: rule weights do not sum to 1");
  }
  return Pcfg{std::move(g)};
}

Wcfg build_ds_grammar(const Cfg& g) {
  Wcfg out;
  out.nonterminals = g.syms.nonterminals;
  out.terminals = g.syms.labels;  // terminal id == rule label id
  out.start = g.start;
  for (const Rule& r : g.rules) {
    WcfgRule wr;
    wr.lhs = r.lhs;
    wr.rhs.push_back(RhsItem::token(r.label));
    for (int nt : r.nt_ids) wr.rhs.push_back(RhsItem::nonterminal(nt));
    wr.weight = 1.0 / static_cast<double>(g.by_lhs[static_cast<size_t>(r.lhs)].size());
    out.rules.push_back(std::move(wr));
  }
  return out;
}

double ds_weight(const Wcfg& gw, const DerivationSequence& ds) {
  // Requires the ds-grammar shape: every rule is A -> terminal NT*.
  std::map<std::pair<int, int>, int> rule_of;  // (lhs, leading terminal) -> rule
  for (size_t i = 0; i < gw.rules.size(); ++i) {
    const WcfgRule& r = gw.rules[i];
    if (r.rhs.empty() || r.rhs[0].is_nt()) {
      throw std::invalid_argument("ds_weight: rule without a leading terminal");
    }
    for (size_t j = 1; j < r.rhs.size(); ++j) {
      if (!r.rhs[j].is_nt()) {
        throw std::invalid_argument("ds_weight: terminal beyond position 0");
      }
    }
    auto key = std::make_pair(r.lhs, r.rhs[0].id);
    if (!rule_of.emplace(key, static_cast<int>(i)).second) {
      throw std::invalid_argument("ds_weight: ambiguous (lhs, terminal) pair");
    }
  }

  std::vector<int> pending{gw.start};
  double weight = 1.0;
  for (int sym : ds) {
    if (pending.empty()) return 0.0;
    auto it = rule_of.find({pending.back(), sym});
    if (it == rule_of.end()) return 0.0;
    const WcfgRule& r = gw.rules[static_cast<size_t>(it->second)];
    weight *= r.weight;
    pending.pop_back();
    for (size_t j = r.rhs.size(); j > 1; --j) pending.push_back(r.rhs[j - 1].id);
  }
  return pending.empty() ? weight : 0.0;
}

std::string dump_wcfg(const Wcfg& g) {
  std::string out;
  if (g.rules.empty()) return "# zero-mass grammar: no rules\n";
  int n = 0;
  for (const WcfgRule& r : g.rules) {
    out += "w" + std::to_string(n++) + ": " + g.nonterminals.name(r.lhs) + " ->";
    for (const RhsItem& item : r.rhs) {
      if (item.is_nt()) {
        out += " " + g.nonterminals.name(item.id);
      } else {
        out += " \"" + g.terminals.name(item.id) + "\"";
      }
    }
    out += " @ " + format_double(r.weight) + "\n";
  }
  return out;
}

Wcfg parse_wcfg(const std::string& text) {
  std::vector<std::string> errors;
  struct Raw {
    std::string lhs;
    std::vector<std::string> items;
    double weight;
  };
  std::vector<Raw> raw;

  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    // Reuse the grammar line shape minus the template, plus '@ weight'.
    size_t a = line.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) continue;
    std::string s = line.substr(a);
    if (s[0] == '#') continue;

    size_t colon = s.find(':');
    size_t arrow = s.find("->");
    size_t at = s.rfind('@');
    if (colon == std::string::npos || arrow == std::string::npos || at == std::string::npos ||
        colon > arrow || at < arrow) {
      errors.push_back("line " + std::to_string(lineno) +
                       ": expected 'label: lhs -> items @ weight'");
      continue;
    }
    Raw r;
    std::istringstream lhs_ss(s.substr(colon + 1, arrow - colon - 1));
    lhs_ss >> r.lhs;
    std::istringstream items_ss(s.substr(arrow + 2, at - arrow - 2));
    std::string atom;
    while (items_ss >> atom) r.items.push_back(atom);
    try {
      std::string w = s.substr(at + 1);
      size_t b = w.find_first_not_of(" \t\r\n");
      size_t e = w.find_last_not_of(" \t\r\n");
      r.weight = parse_double(std::string_view(w).substr(b, e - b + 1));
    } catch (const std::exception&) {
      errors.push_back("line " + std::to_string(lineno) + ": bad weight");
      continue;
    }
    if (r.lhs.empty() || r.items.empty()) {
      errors.push_back("line " + std::to_string(lineno) + ": empty lhs or rhs");
      continue;
    }
    if (r.weight < 0) {
      errors.push_back("line " + std::to_string(lineno) + ": negative weight");
      continue;
    }
    raw.push_back(std::move(r));
  }
  if (raw.empty() && errors.empty()) errors.push_back("wcfg has no rules");

  Wcfg g;
  for (const Raw& r : raw) g.nonterminals.intern(r.lhs);
  if (!raw.empty()) g.start = *g.nonterminals.id_of(raw.front().lhs);
  for (const Raw& r : raw) {
    WcfgRule wr;
    wr.lhs = *g.nonterminals.id_of(r.lhs);
    wr.weight = r.weight;
    for (const std::string& atom : r.items) {
      if (atom.front() == '"') {
        if (atom.size() < 3 || atom.back() != '"') {
          errors.push_back("malformed quoted terminal " + atom);
          continue;
        }
        wr.rhs.push_back(RhsItem::token(g.terminals.intern(atom.substr(1, atom.size() - 2))));
      } else if (auto nt = g.nonterminals.id_of(atom)) {
        wr.rhs.push_back(RhsItem::nonterminal(*nt));
      } else {
        errors.push_back("undefined nonterminal '" + atom + "'");
      }
    }
    g.rules.push_back(std::move(wr));
  }
  if (!errors.empty()) throw GrammarError(std::move(errors));
  return g;
}

Wcfg parse_wcfg_file(const std::string& path) { return parse_wcfg(read_file(path)); }

}  // namespace backdrop
