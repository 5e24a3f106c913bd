#pragma once

#include "presentation.hpp"

#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mscodec {

struct ValidationIssue {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }

  bool has(const std::string& code) const {
    for (const auto& issue : issues)
      if (issue.code == code) return true;
    return false;
  }

  std::string to_string() const {
    std::ostringstream out;
    if (ok()) {
      out << "ok\n";
    } else {
      for (const auto& issue : issues) out << issue.code << ": " << issue.message << "\n";
    }
    return out.str();
  }
};

namespace detail {

inline std::string tuple_label(const FinitePresentation& s, size_t pred, const std::vector<size_t>& tuple) {
  const auto& arity = s.signature.predicates[pred].arity;
  std::string out = "(";
  for (size_t k = 0; k < tuple.size(); ++k) {
    if (k) out += ",";
    out += s.points[arity[k]][tuple[k]];
  }
  return out + ")";
}

}  // namespace detail

// Checks every structure axiom on the explicit tables: shapes, name
// uniqueness, metric axioms including all triangles, value ranges, and
// exhaustive compliance of each predicate with its declared modulus.
inline ValidationReport validate_structure(const FinitePresentation& s) {
  ValidationReport report;
  auto add = [&](std::string code, std::string message) {
    report.issues.push_back({std::move(code), std::move(message)});
  };

  if (s.signature.sorts.empty()) {
    add("signature.sorts", "structure has no sorts");
    return report;
  }
  {
    std::set<std::string> seen;
    for (const auto& name : s.signature.sorts) {
      if (name.empty()) add("signature.sorts", "empty sort name");
      if (!seen.insert(name).second) add("signature.sorts", "duplicate sort name \"" + name + "\"");
    }
  }
  if (s.signature.home_sort >= s.signature.sorts.size()) {
    add("signature.home", "home sort index out of range");
    return report;
  }
  {
    std::set<std::string> seen;
    for (const auto& p : s.signature.predicates) {
      if (p.name.empty()) add("signature.predicates", "empty predicate name");
      if (!seen.insert(p.name).second) add("signature.predicates", "duplicate predicate name \"" + p.name + "\"");
      for (size_t sort : p.arity)
        if (sort >= s.signature.sorts.size())
          add("signature.predicates", "predicate \"" + p.name + "\" uses an unknown sort");
    }
  }
  if (s.points.size() != s.sort_count() || s.metric.size() != s.sort_count()) {
    add("shape.sorts", "point or metric tables do not match the sort list");
    return report;
  }
  if (s.tables.size() != s.signature.predicates.size()) {
    add("shape.predicates", "value tables do not match the predicate list");
    return report;
  }

  bool metric_in_range = true;
  for (size_t sort = 0; sort < s.sort_count(); ++sort) {
    const auto& names = s.points[sort];
    const std::string& label = s.signature.sorts[sort];
    if (names.empty()) add("sort.empty", "sort " + label + " has no points");
    std::set<std::string> seen;
    for (const auto& name : names) {
      if (name.empty()) add("sort.names", "empty point name in sort " + label);
      if (!seen.insert(name).second) add("sort.names", "duplicate point name \"" + name + "\" in sort " + label);
    }
    const auto& m = s.metric[sort];
    if (m.size() != names.size()) {
      add("shape.metric", "metric size does not match point count in sort " + label);
      continue;
    }
    for (size_t i = 0; i < m.size(); ++i) {
      if (m.at(i, i) != 0) add("metric.diagonal", "d(" + names[i] + "," + names[i] + ") is nonzero");
      for (size_t j = i + 1; j < m.size(); ++j) {
        const Rational& d = m.at(i, j);
        if (d < 0 || d > 1) {
          add("metric.range", "d(" + names[i] + "," + names[j] + ") = " + format_rational(d) + " is outside [0,1]");
          metric_in_range = false;
        }
        if (d == 0) add("metric.separation", "distinct points " + names[i] + "," + names[j] + " at distance 0");
      }
    }
    for (size_t i = 0; i < m.size(); ++i)
      for (size_t j = 0; j < m.size(); ++j)
        for (size_t k = 0; k < m.size(); ++k)
          if (m.at(i, k) > m.at(i, j) + m.at(j, k)) {
            add("metric.triangle", "d(" + names[i] + "," + names[k] + ") > d(" + names[i] + "," + names[j] +
                                       ") + d(" + names[j] + "," + names[k] + ") in sort " + label);
            i = j = m.size();  // one witness per sort is enough
            break;
          }
  }

  for (size_t p = 0; p < s.signature.predicates.size(); ++p) {
    const auto& decl = s.signature.predicates[p];
    const auto& table = s.tables[p];
    if (table.shape() != s.table_shape(p)) {
      add("shape.table", "value table of " + decl.name + " does not match the point counts");
      continue;
    }
    if (!decl.modulus.in_unit_range())
      add("modulus.range", "modulus of " + decl.name + " leaves [0,1]");
    if (decl.modulus(Rational(0)) != 0)
      add("modulus.zero", "modulus of " + decl.name + " is nonzero at 0");
    if (!decl.modulus.is_nondecreasing())
      add("modulus.monotone", "modulus of " + decl.name + " is decreasing somewhere");

    bool range_ok = true;
    for_each_tuple(table.shape(), [&](const std::vector<size_t>& tuple) {
      const Rational& v = table.at(tuple);
      if (range_ok && (v < 0 || v > 1)) {
        add("predicate.range", decl.name + detail::tuple_label(s, p, tuple) + " = " + format_rational(v) +
                                   " is outside [0,1]");
        range_ok = false;  // one witness per predicate is enough
      }
    });

    // Modulus compliance over all tuple pairs. Skipped when a distance left
    // [0,1], since the modulus is only defined there and the range issue is
    // already on the report.
    if (!metric_in_range) continue;
    bool modulus_ok = true;
    std::vector<std::vector<size_t>> tuples;
    for_each_tuple(table.shape(), [&](const std::vector<size_t>& t) { tuples.push_back(t); });
    for (size_t a = 0; a < tuples.size() && modulus_ok; ++a)
      for (size_t b = a + 1; b < tuples.size() && modulus_ok; ++b) {
        Rational gap = rat_abs(table.at(tuples[a]) - table.at(tuples[b]));
        Rational bound = decl.modulus(s.tuple_distance(p, tuples[a], tuples[b]));
        if (gap > bound) {
          add("modulus.violation", "|" + decl.name + detail::tuple_label(s, p, tuples[a]) + " - " + decl.name +
                                       detail::tuple_label(s, p, tuples[b]) + "| = " + format_rational(gap) +
                                       " exceeds the modulus bound " + format_rational(bound));
          modulus_ok = false;  // one witness per predicate is enough
        }
      }
  }

  return report;
}

}  // namespace mscodec
