#pragma once

#include "pl_function.hpp"
#include "rational.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace mscodec {

// A predicate symbol: name, argument sorts (by index into Signature::sorts),
// and its declared modulus of uniform continuity. The modulus promise is
// |P(x) - P(y)| <= modulus(max_i d(x_i, y_i)) for tuples x, y.
struct PredicateDecl {
  std::string name;
  std::vector<size_t> arity;
  PLFunction modulus;

  friend bool operator==(const PredicateDecl&, const PredicateDecl&) = default;
};

struct Signature {
  std::vector<std::string> sorts;
  size_t home_sort = 0;
  std::vector<PredicateDecl> predicates;

  size_t sort_index(const std::string& name) const {
    for (size_t i = 0; i < sorts.size(); ++i)
      if (sorts[i] == name) return i;
    throw input_error("unknown sort \"" + name + "\"");
  }

  size_t predicate_index(const std::string& name) const {
    for (size_t i = 0; i < predicates.size(); ++i)
      if (predicates[i].name == name) return i;
    throw input_error("unknown predicate \"" + name + "\"");
  }

  bool has_predicate(const std::string& name) const {
    for (const auto& p : predicates)
      if (p.name == name) return true;
    return false;
  }

  size_t max_arity() const {
    size_t m = 0;
    for (const auto& p : predicates) m = std::max(m, p.arity.size());
    return m;
  }

  friend bool operator==(const Signature&, const Signature&) = default;
};

// Picks a name not already in `taken` by appending a numeric suffix.
inline std::string unique_name(std::string base, const std::vector<std::string>& taken) {
  auto used = [&](const std::string& c) {
    for (const auto& t : taken)
      if (t == c) return true;
    return false;
  };
  if (!used(base)) return base;
  for (int i = 2;; ++i) {
    std::string c = base + "_" + std::to_string(i);
    if (!used(c)) return c;
  }
}

}  // namespace mscodec
