#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace backdrop {

/// Injective string <-> dense-id interner. Ids are assigned in insertion
/// order and are stable for the lifetime of the interner.
class StringInterner {
 public:
  int intern(const std::string& s) {
    auto it = ids_.find(s);
    if (it != ids_.end()) return it->second;
    int id = static_cast<int>(names_.size());
    names_.push_back(s);
    ids_.emplace(s, id);
    return id;
  }

  std::optional<int> id_of(const std::string& s) const {
    auto it = ids_.find(s);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(int id) const {
    if (id < 0 || id >= static_cast<int>(names_.size())) {
      throw std::out_of_range("bad symbol id " + std::to_string(id));
    }
    return names_[static_cast<size_t>(id)];
  }

  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const StringInterner& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

/// The three symbol spaces of a grammar.
struct SymbolTable {
  StringInterner nonterminals;
  StringInterner labels;
  StringInterner tokens;
};

}  // namespace backdrop
