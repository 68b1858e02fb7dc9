#include "backdrop/wfsa.hpp"

#include <map>
#include <sstream>

#include "backdrop/util.hpp"

namespace backdrop {

Wfsa::Wfsa(int num_states, int initial, StringInterner alphabet,
           std::vector<Transition> transitions, std::vector<double> exits)
    : num_states_(num_states),
      initial_(initial),
      alphabet_(std::move(alphabet)),
      transitions_(std::move(transitions)),
      exits_(std::move(exits)) {
  if (initial_ < 0 || initial_ >= num_states_) {
    throw std::invalid_argument("wfsa: initial state out of range");
  }
  exits_.resize(static_cast<size_t>(num_states_), 0.0);
  for (const Transition& t : transitions_) {
    if (t.from < 0 || t.from >= num_states_ || t.to < 0 || t.to >= num_states_) {
      throw std::invalid_argument("wfsa: transition state out of range");
    }
    if (t.sym < 0 || t.sym >= alphabet_.size()) {
      throw std::invalid_argument("wfsa: transition symbol out of range");
    }
    if (t.weight < 0) throw std::invalid_argument("wfsa: negative transition weight");
  }
  for (double e : exits_) {
    if (e < 0) throw std::invalid_argument("wfsa: negative exit weight");
  }

  // Merge parallel arcs; sum over paths is preserved.
  std::map<std::tuple<int, int, int>, double> merged;
  for (const Transition& t : transitions_) {
    merged[{t.from, t.sym, t.to}] += t.weight;
  }
  arcs_.assign(static_cast<size_t>(num_states_) * static_cast<size_t>(alphabet_.size()), {});
  transitions_.clear();
  for (const auto& [key, w] : merged) {
    auto [from, sym, to] = key;
    transitions_.push_back({from, sym, w, to});
    arcs_[static_cast<size_t>(from) * static_cast<size_t>(alphabet_.size()) +
          static_cast<size_t>(sym)]
        .emplace_back(to, w);
  }
}

const std::vector<std::pair<int, double>>& Wfsa::arcs(int state, int sym) const {
  return arcs_[static_cast<size_t>(state) * static_cast<size_t>(alphabet_.size()) +
               static_cast<size_t>(sym)];
}

double Wfsa::string_weight(const DerivationSequence& seq) const {
  // Forward algorithm over state weights; handles nondeterminism by summing.
  std::vector<double> cur(static_cast<size_t>(num_states_), 0.0);
  cur[static_cast<size_t>(initial_)] = 1.0;
  std::vector<double> next(static_cast<size_t>(num_states_), 0.0);
  for (int sym : seq) {
    if (sym < 0 || sym >= alphabet_.size()) {
      throw std::invalid_argument("string_weight: symbol outside automaton alphabet");
    }
    std::fill(next.begin(), next.end(), 0.0);
    for (int q = 0; q < num_states_; ++q) {
      double w = cur[static_cast<size_t>(q)];
      if (w == 0.0) continue;
      for (const auto& [to, tw] : arcs(q, sym)) {
        next[static_cast<size_t>(to)] += w * tw;
      }
    }
    std::swap(cur, next);
  }
  double total = 0.0;
  for (int q = 0; q < num_states_; ++q) {
    total += cur[static_cast<size_t>(q)] * exits_[static_cast<size_t>(q)];
  }
  return total;
}

Wfsa penalize_automaton(int sym, double delta, const StringInterner& alphabet) {
  if (sym < 0 || sym >= alphabet.size()) {
    throw std::invalid_argument("penalize_automaton: symbol outside alphabet");
  }
  std::vector<Wfsa::Transition> trans;
  for (int x = 0; x < alphabet.size(); ++x) {
    trans.push_back({0, x, x == sym ? delta : 1.0, 0});
  }
  return Wfsa(1, 0, alphabet, std::move(trans), {1.0});
}

Wfsa require_automaton(int sym, double eta, const StringInterner& alphabet) {
  if (sym < 0 || sym >= alphabet.size()) {
    throw std::invalid_argument("require_automaton: symbol outside alphabet");
  }
  std::vector<Wfsa::Transition> trans;
  for (int x = 0; x < alphabet.size(); ++x) {
    if (x == sym) {
      trans.push_back({0, x, 1.0, 1});
    } else {
      trans.push_back({0, x, 1.0, 0});
    }
    trans.push_back({1, x, 1.0, 1});
  }
  return Wfsa(2, 0, alphabet, std::move(trans), {eta, 1.0});
}

Wfsa unigram_automaton(const std::vector<double>& probs, const StringInterner& alphabet) {
  if (static_cast<int>(probs.size()) != alphabet.size()) {
    throw std::invalid_argument("unigram_automaton: probs must cover the alphabet");
  }
  std::vector<Wfsa::Transition> trans;
  for (int x = 0; x < alphabet.size(); ++x) {
    trans.push_back({0, x, probs[static_cast<size_t>(x)], 0});
  }
  return Wfsa(1, 0, alphabet, std::move(trans), {1.0});
}

Wfsa identity_automaton(const StringInterner& alphabet) {
  return unigram_automaton(std::vector<double>(static_cast<size_t>(alphabet.size()), 1.0),
                           alphabet);
}

Wfsa prefix_automaton(const DerivationSequence& prefix, const StringInterner& alphabet,
                      bool exact) {
  int n = static_cast<int>(prefix.size());
  std::vector<Wfsa::Transition> trans;
  for (int i = 0; i < n; ++i) {
    if (prefix[static_cast<size_t>(i)] < 0 || prefix[static_cast<size_t>(i)] >= alphabet.size()) {
      throw std::invalid_argument("prefix_automaton: symbol outside alphabet");
    }
    trans.push_back({i, prefix[static_cast<size_t>(i)], 1.0, i + 1});
  }
  if (!exact) {
    for (int x = 0; x < alphabet.size(); ++x) trans.push_back({n, x, 1.0, n});
  }
  std::vector<double> exits(static_cast<size_t>(n) + 1, 0.0);
  exits[static_cast<size_t>(n)] = 1.0;
  return Wfsa(n + 1, 0, alphabet, std::move(trans), std::move(exits));
}

Wfsa product(const Wfsa& a, const Wfsa& b) {
  if (!(a.alphabet() == b.alphabet())) {
    throw std::invalid_argument("product: automata have different alphabets");
  }
  const int nsym = a.alphabet().size();

  // Reachable pair states only.
  std::map<std::pair<int, int>, int> ids;
  std::vector<std::pair<int, int>> pairs;
  auto state_of = [&](int qa, int qb) {
    auto [it, fresh] = ids.emplace(std::make_pair(qa, qb), static_cast<int>(pairs.size()));
    if (fresh) pairs.emplace_back(qa, qb);
    return it->second;
  };

  std::vector<Wfsa::Transition> trans;
  int initial = state_of(a.initial(), b.initial());
  for (size_t i = 0; i < pairs.size(); ++i) {
    auto [qa, qb] = pairs[i];
    for (int sym = 0; sym < nsym; ++sym) {
      for (const auto& [ta, wa] : a.arcs(qa, sym)) {
        for (const auto& [tb, wb] : b.arcs(qb, sym)) {
          trans.push_back({static_cast<int>(i), sym, wa * wb, state_of(ta, tb)});
        }
      }
    }
  }
  std::vector<double> exits(pairs.size(), 0.0);
  for (size_t i = 0; i < pairs.size(); ++i) {
    exits[i] = a.exit(pairs[i].first) * b.exit(pairs[i].second);
  }
  return Wfsa(static_cast<int>(pairs.size()), initial, a.alphabet(), std::move(trans),
              std::move(exits));
}

std::string dump_wfsa(const Wfsa& a) {
  std::string out;
  out += "states " + std::to_string(a.num_states()) + "\n";
  out += "initial " + std::to_string(a.initial()) + "\n";
  out += "alphabet " + join(a.alphabet().names()) + "\n";
  for (const auto& t : a.transitions()) {
    out += "trans " + std::to_string(t.from) + " " + a.alphabet().name(t.sym) + " " +
           format_double(t.weight) + " " + std::to_string(t.to) + "\n";
  }
  for (int q = 0; q < a.num_states(); ++q) {
    if (a.exit(q) != 0.0) {
      out += "exit " + std::to_string(q) + " " + format_double(a.exit(q)) + "\n";
    }
  }
  return out;
}

Wfsa parse_wfsa(const std::string& text) {
  int num_states = -1;
  int initial = -1;
  StringInterner alphabet;
  std::vector<Wfsa::Transition> trans;
  std::vector<double> exits;

  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error("wfsa line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(lines, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string kw;
    if (!(ss >> kw) || kw[0] == '#') continue;
    if (kw == "states") {
      if (!(ss >> num_states) || num_states <= 0) fail("bad state count");
      exits.assign(static_cast<size_t>(num_states), 0.0);
    } else if (kw == "initial") {
      if (!(ss >> initial)) fail("bad initial state");
    } else if (kw == "alphabet") {
      std::string sym;
      while (ss >> sym) alphabet.intern(sym);
    } else if (kw == "trans") {
      int from, to;
      std::string sym, w;
      if (!(ss >> from >> sym >> w >> to)) fail("expected 'trans from sym weight to'");
      auto id = alphabet.id_of(sym);
      if (!id) fail("symbol '" + sym + "' not in alphabet");
      trans.push_back({from, *id, parse_double(w), to});
    } else if (kw == "exit") {
      int q;
      std::string w;
      if (!(ss >> q >> w)) fail("expected 'exit state weight'");
      if (exits.empty()) fail("'states' must come before 'exit'");
      if (q < 0 || q >= num_states) fail("exit state out of range");
      exits[static_cast<size_t>(q)] = parse_double(w);
    } else {
      fail("unknown directive '" + kw + "'");
    }
  }
  if (num_states <= 0 || initial < 0) {
    throw std::runtime_error("wfsa: missing 'states' or 'initial' line");
  }
  return Wfsa(num_states, initial, std::move(alphabet), std::move(trans), std::move(exits));
}

}  // namespace backdrop
