#include "backdrop/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "backdrop/util.hpp"

namespace backdrop {

namespace {

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

struct RawRule {
  int line;
  std::string label;
  std::string lhs;
  std::vector<std::string> items;  // quoted items keep their quotes here
  std::string lf_template;
};

// Splits the rule body into whitespace-separated atoms; a double-quoted atom
// must open and close on the same atom.
bool split_items(const std::string& body, std::vector<std::string>* items, std::string* err) {
  std::istringstream ss(body);
  std::string atom;
  while (ss >> atom) {
    if (atom.front() == '"') {
      if (atom.size() < 3 || atom.back() != '"') {
        *err = "malformed quoted token " + atom;
        return false;
      }
    }
    items->push_back(atom);
  }
  return true;
}

}  // namespace

GrammarError::GrammarError(std::vector<std::string> violations)
    : std::runtime_error("invalid grammar:\n  " + join(violations, "\n  ")),
      violations_(std::move(violations)) {}

Cfg load_grammar(const std::string& text) {
  std::vector<std::string> errors;
  std::vector<RawRule> raw;

  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    std::string s = strip(line);
    if (s.empty() || s[0] == '#') continue;

    RawRule r;
    r.line = lineno;
    size_t colon = s.find(':');
    size_t arrow = s.find("->");
    if (colon == std::string::npos || arrow == std::string::npos || colon > arrow) {
      errors.push_back("line " + std::to_string(lineno) +
                       ": expected 'label: lhs -> items | lf_template'");
      continue;
    }
    r.label = strip(s.substr(0, colon));
    r.lhs = strip(s.substr(colon + 1, arrow - colon - 1));
    std::string rest = s.substr(arrow + 2);
    size_t bar = rest.rfind('|');
    if (bar == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": missing '| lf_template'");
      continue;
    }
    r.lf_template = strip(rest.substr(bar + 1));
    std::string body = rest.substr(0, bar);
    std::string err;
    if (!split_items(body, &r.items, &err)) {
      errors.push_back("line " + std::to_string(lineno) + ": " + err);
      continue;
    }
    if (r.label.empty() || r.lhs.empty()) {
      errors.push_back("line " + std::to_string(lineno) + ": empty label or lhs");
      continue;
    }
    if (r.items.empty()) {
      errors.push_back("line " + std::to_string(lineno) + ": empty rhs in rule '" + r.label + "'");
      continue;
    }
    raw.push_back(std::move(r));
  }

  if (raw.empty() && errors.empty()) {
    errors.push_back("grammar has no rules");
  }

  Cfg g;
  // Nonterminals are declared by appearing as an LHS.
  for (const RawRule& r : raw) g.syms.nonterminals.intern(r.lhs);
  if (!raw.empty()) g.start = *g.syms.nonterminals.id_of(raw.front().lhs);

  std::set<std::string> seen_labels;
  for (const RawRule& r : raw) {
    if (!seen_labels.insert(r.label).second) {
      errors.push_back("duplicate rule label '" + r.label + "' (line " + std::to_string(r.line) +
                       ")");
      continue;
    }
    Rule rule;
    rule.label = g.syms.labels.intern(r.label);
    rule.lhs = *g.syms.nonterminals.id_of(r.lhs);
    bool rhs_ok = true;
    for (const std::string& atom : r.items) {
      if (atom.front() == '"') {
        std::string tok = lower(atom.substr(1, atom.size() - 2));
        rule.rhs.push_back(RhsItem::token(g.syms.tokens.intern(tok)));
      } else if (auto nt = g.syms.nonterminals.id_of(atom)) {
        rule.rhs.push_back(RhsItem::nonterminal(*nt));
        rule.nt_ids.push_back(*nt);
      } else {
        errors.push_back("undefined nonterminal '" + atom + "' in rule '" + r.label + "'");
        rhs_ok = false;
      }
    }
    // Every $i for i in 1..k must appear, and no other placeholder may.
    std::set<int> used;
    bool bad_placeholder = false;
    const std::string& tpl = r.lf_template;
    for (size_t i = 0; i < tpl.size(); ++i) {
      if (tpl[i] != '$') continue;
      size_t j = i + 1;
      int idx = 0;
      while (j < tpl.size() && std::isdigit(static_cast<unsigned char>(tpl[j]))) {
        idx = idx * 10 + (tpl[j] - '0');
        ++j;
      }
      if (j == i + 1 || idx < 1 || idx > static_cast<int>(rule.nt_ids.size())) {
        bad_placeholder = true;
      } else {
        used.insert(idx);
      }
      i = j - 1;
    }
    if (rhs_ok && (bad_placeholder || used.size() != rule.nt_ids.size())) {
      errors.push_back("rule '" + r.label + "': lf template placeholders do not match the " +
                       std::to_string(rule.nt_ids.size()) + " rhs nonterminal(s)");
    }
    rule.lf_template = r.lf_template;
    g.rules.push_back(std::move(rule));
  }

  if (!errors.empty()) throw GrammarError(std::move(errors));

  g.by_lhs.assign(static_cast<size_t>(g.syms.nonterminals.size()), {});
  for (size_t i = 0; i < g.rules.size(); ++i) {
    g.by_lhs[static_cast<size_t>(g.rules[i].lhs)].push_back(static_cast<int>(i));
  }
  return g;
}

Cfg load_grammar_file(const std::string& path) { return load_grammar(read_file(path)); }

std::string dump_grammar(const Cfg& g) {
  std::string out;
  for (const Rule& r : g.rules) {
    out += g.label_name(r.label) + ": " + g.nt_name(r.lhs) + " ->";
    for (const RhsItem& item : r.rhs) {
      if (item.is_nt()) {
        out += " " + g.nt_name(item.id);
      } else {
        out += " \"" + g.syms.tokens.name(item.id) + "\"";
      }
    }
    out += " | " + r.lf_template + "\n";
  }
  return out;
}

DerivationSequence linearize(const DerivationTree& tree) {
  DerivationSequence out;
  std::vector<const DerivationTree*> stack{&tree};
  while (!stack.empty()) {
    const DerivationTree* node = stack.back();
    stack.pop_back();
    out.push_back(node->rule);
    for (auto it = node->children.rbegin(); it != node->children.rend(); ++it) {
      stack.push_back(&*it);
    }
  }
  return out;
}

namespace {

DerivationTree parse_ds_rec(const DerivationSequence& ds, const Cfg& g, int expected_nt,
                            size_t* pos) {
  if (*pos >= ds.size()) {
    throw DsError("incomplete derivation sequence: nonterminal '" + g.nt_name(expected_nt) +
                  "' has no expansion");
  }
  int label = ds[*pos];
  const Rule& r = g.rule(label);
  if (r.lhs != expected_nt) {
    throw DsError("lhs mismatch at position " + std::to_string(*pos) + ": rule '" +
                  g.label_name(label) + "' expands '" + g.nt_name(r.lhs) + "' but '" +
                  g.nt_name(expected_nt) + "' is pending");
  }
  ++*pos;
  DerivationTree node{label, {}};
  node.children.reserve(r.nt_ids.size());
  for (int nt : r.nt_ids) {
    node.children.push_back(parse_ds_rec(ds, g, nt, pos));
  }
  return node;
}

}  // namespace

DerivationTree parse_ds(const DerivationSequence& ds, const Cfg& g) {
  size_t pos = 0;
  DerivationTree tree = parse_ds_rec(ds, g, g.start, &pos);
  if (pos != ds.size()) {
    throw DsError("trailing labels after a complete tree (position " + std::to_string(pos) + ")");
  }
  return tree;
}

bool is_valid_prefix(const DerivationSequence& prefix, const Cfg& g) {
  // Leftmost reconstruction: the pending-nonterminal stack, leftmost on top.
  std::vector<int> pending{g.start};
  for (int label : prefix) {
    if (pending.empty()) return false;  // labels after a complete tree
    if (label < 0 || label >= static_cast<int>(g.rules.size())) return false;
    const Rule& r = g.rule(label);
    if (r.lhs != pending.back()) return false;
    pending.pop_back();
    for (auto it = r.nt_ids.rbegin(); it != r.nt_ids.rend(); ++it) pending.push_back(*it);
  }
  return true;
}

std::vector<std::string> yield_cf(const DerivationTree& tree, const Cfg& g) {
  std::vector<std::string> out;
  const Rule& r = g.rule(tree.rule);
  size_t child = 0;
  for (const RhsItem& item : r.rhs) {
    if (item.is_nt()) {
      auto sub = yield_cf(tree.children[child++], g);
      out.insert(out.end(), sub.begin(), sub.end());
    } else {
      out.push_back(g.syms.tokens.name(item.id));
    }
  }
  return out;
}

std::string compose_lf(const DerivationTree& tree, const Cfg& g) {
  const Rule& r = g.rule(tree.rule);
  std::vector<std::string> child_lfs;
  child_lfs.reserve(tree.children.size());
  for (const DerivationTree& c : tree.children) child_lfs.push_back(compose_lf(c, g));

  const std::string& tpl = r.lf_template;
  std::string out;
  for (size_t i = 0; i < tpl.size(); ++i) {
    if (tpl[i] == '$' && i + 1 < tpl.size() &&
        std::isdigit(static_cast<unsigned char>(tpl[i + 1]))) {
      size_t j = i + 1;
      int idx = 0;
      while (j < tpl.size() && std::isdigit(static_cast<unsigned char>(tpl[j]))) {
        idx = idx * 10 + (tpl[j] - '0');
        ++j;
      }
      out += child_lfs[static_cast<size_t>(idx - 1)];
      i = j - 1;
    } else {
      out.push_back(tpl[i]);
    }
  }
  return out;
}

DerivationSequence parse_labels(const std::string& text, const Cfg& g) {
  DerivationSequence out;
  for (const std::string& name : tokenize(text)) {
    auto id = g.syms.labels.id_of(name);
    if (!id) throw DsError("unknown rule label '" + name + "'");
    out.push_back(*id);
  }
  return out;
}

std::string labels_to_string(const DerivationSequence& ds, const Cfg& g) {
  std::vector<std::string> names;
  names.reserve(ds.size());
  for (int label : ds) names.push_back(g.label_name(label));
  return join(names);
}

}  // namespace backdrop
