#pragma once

#include "presentation.hpp"

#include <json.hpp>

#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace mscodec {

// Insertion-ordered JSON keeps serialized files byte stable across runs.
using Json = nlohmann::ordered_json;

inline Json pl_to_json(const PLFunction& f) {
  Json out = Json::array();
  for (const auto& p : f.points()) out.push_back({format_rational(p.x), format_rational(p.y)});
  return out;
}

inline PLFunction pl_from_json(const Json& j) {
  if (!j.is_array()) throw input_error("piecewise linear function must be an array of [x,y] pairs");
  std::vector<PLFunction::Point> pts;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
      throw input_error("piecewise linear breakpoint must be a pair of rational strings");
    pts.push_back({parse_rational(e[0].get<std::string>()), parse_rational(e[1].get<std::string>())});
  }
  try {
    return PLFunction(std::move(pts));
  } catch (const std::invalid_argument& e) {
    throw input_error(e.what());
  }
}

inline Json presentation_to_json(const FinitePresentation& s) {
  Json sig;
  sig["sorts"] = s.signature.sorts;
  sig["home_sort"] = s.signature.sorts.at(s.signature.home_sort);
  Json preds = Json::array();
  for (const auto& p : s.signature.predicates) {
    Json decl;
    decl["name"] = p.name;
    Json arity = Json::array();
    for (size_t sort : p.arity) arity.push_back(s.signature.sorts.at(sort));
    decl["arity"] = std::move(arity);
    decl["modulus"] = pl_to_json(p.modulus);
    preds.push_back(std::move(decl));
  }
  sig["predicates"] = std::move(preds);

  Json points;
  for (size_t sort = 0; sort < s.sort_count(); ++sort) points[s.signature.sorts[sort]] = s.points[sort];

  Json metric;
  for (size_t sort = 0; sort < s.sort_count(); ++sort) {
    Json rows = Json::array();
    const auto& m = s.metric[sort];
    for (size_t i = 0; i < m.size(); ++i)
      for (size_t j = i + 1; j < m.size(); ++j)
        rows.push_back({s.points[sort][i], s.points[sort][j], format_rational(m.at(i, j))});
    metric[s.signature.sorts[sort]] = std::move(rows);
  }

  Json values = Json::object();
  for (size_t p = 0; p < s.signature.predicates.size(); ++p) {
    const auto& arity = s.signature.predicates[p].arity;
    Json rows = Json::array();
    for_each_tuple(s.tables[p].shape(), [&](const std::vector<size_t>& tuple) {
      Json row = Json::array();
      for (size_t k = 0; k < tuple.size(); ++k) row.push_back(s.points[arity[k]][tuple[k]]);
      row.push_back(format_rational(s.tables[p].at(tuple)));
      rows.push_back(std::move(row));
    });
    values[s.signature.predicates[p].name] = std::move(rows);
  }

  Json out;
  out["signature"] = std::move(sig);
  out["points"] = std::move(points);
  out["metric"] = std::move(metric);
  out["predicates"] = std::move(values);
  return out;
}

namespace detail {

inline const Json& require(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw input_error(std::string("missing key \"") + key + "\"");
  return *it;
}

inline std::string require_string(const Json& j) {
  if (!j.is_string()) throw input_error("expected a string");
  return j.get<std::string>();
}

}  // namespace detail

inline FinitePresentation presentation_from_json(const Json& j) {
  if (!j.is_object()) throw input_error("structure file must be a JSON object");
  FinitePresentation s;

  const Json& sig = detail::require(j, "signature");
  for (const auto& name : detail::require(sig, "sorts")) s.signature.sorts.push_back(detail::require_string(name));
  if (s.signature.sorts.empty()) throw input_error("structure needs at least one sort");
  s.signature.home_sort = s.signature.sort_index(detail::require_string(detail::require(sig, "home_sort")));
  if (auto it = sig.find("predicates"); it != sig.end()) {
    for (const auto& decl : *it) {
      PredicateDecl p;
      p.name = detail::require_string(detail::require(decl, "name"));
      for (const auto& sort : detail::require(decl, "arity"))
        p.arity.push_back(s.signature.sort_index(detail::require_string(sort)));
      p.modulus = pl_from_json(detail::require(decl, "modulus"));
      s.signature.predicates.push_back(std::move(p));
    }
  }

  const Json& points = detail::require(j, "points");
  s.points.resize(s.sort_count());
  for (size_t sort = 0; sort < s.sort_count(); ++sort) {
    const Json& names = detail::require(points, s.signature.sorts[sort].c_str());
    for (const auto& name : names) s.points[sort].push_back(detail::require_string(name));
    if (s.points[sort].empty()) throw input_error("sort " + s.signature.sorts[sort] + " has no points");
  }

  const Json& metric = detail::require(j, "metric");
  s.metric.resize(s.sort_count());
  for (size_t sort = 0; sort < s.sort_count(); ++sort) {
    size_t n = s.point_count(sort);
    SymMatrix m(n);
    std::vector<bool> given(n * n, false);
    const Json& rows = detail::require(metric, s.signature.sorts[sort].c_str());
    for (const auto& row : rows) {
      if (!row.is_array() || row.size() != 3)
        throw input_error("metric entry must be [point, point, distance]");
      size_t a = s.point_index(sort, detail::require_string(row[0]));
      size_t b = s.point_index(sort, detail::require_string(row[1]));
      Rational d = parse_rational(detail::require_string(row[2]));
      if (a == b) {
        if (d != 0) throw input_error("metric entry on the diagonal must be 0");
        continue;
      }
      if (given[a * n + b] && m.at(a, b) != d)
        throw input_error("conflicting metric entries for " + s.points[sort][a] + "," + s.points[sort][b]);
      given[a * n + b] = given[b * n + a] = true;
      m.set(a, b, d);
    }
    for (size_t a = 0; a < n; ++a)
      for (size_t b = a + 1; b < n; ++b)
        if (!given[a * n + b])
          throw input_error("missing metric entry for " + s.points[sort][a] + "," + s.points[sort][b] +
                            " in sort " + s.signature.sorts[sort]);
    s.metric[sort] = std::move(m);
  }

  const Json* values = nullptr;
  if (auto it = j.find("predicates"); it != j.end()) values = &*it;
  for (size_t p = 0; p < s.signature.predicates.size(); ++p) {
    const auto& decl = s.signature.predicates[p];
    PredTable t(s.table_shape(p));
    std::vector<bool> given(t.cell_count(), false);
    if (values == nullptr) throw input_error("missing key \"predicates\"");
    const Json& rows = detail::require(*values, decl.name.c_str());
    for (const auto& row : rows) {
      if (!row.is_array() || row.size() != decl.arity.size() + 1)
        throw input_error("value entry of " + decl.name + " must list all arguments and the value");
      std::vector<size_t> tuple(decl.arity.size());
      for (size_t k = 0; k < decl.arity.size(); ++k)
        tuple[k] = s.point_index(decl.arity[k], detail::require_string(row[k]));
      Rational v = parse_rational(detail::require_string(row[decl.arity.size()]));
      size_t flat = t.flat_index(tuple);
      if (given[flat] && t.at(tuple) != v)
        throw input_error("conflicting value entries for " + decl.name);
      given[flat] = true;
      t.set(tuple, v);
    }
    for (size_t flat = 0; flat < t.cell_count(); ++flat)
      if (!given[flat]) throw input_error("value table of " + decl.name + " is missing entries");
    s.tables.push_back(std::move(t));
  }
  if (s.signature.predicates.empty() && values != nullptr && !values->empty())
    throw input_error("value tables given for undeclared predicates");

  return s;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw input_error(path + ": " + e.what());
  }
  return j;
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

inline FinitePresentation read_structure_file(const std::string& path) {
  return presentation_from_json(read_json_file(path));
}

}  // namespace mscodec
