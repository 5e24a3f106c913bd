#pragma once

#include "json_io.hpp"
#include "oracle.hpp"
#include "presentation.hpp"
#include "validate.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mscodec {

// A point of the encoded space: the source universe A, one shrinking copy of
// A per level, an overflow point the level copies converge to, and a tag
// point that sits far from everything and anchors all the decoding formulas.
struct EncodedPoint {
  enum class Kind { base, level, infinity, tag };

  Kind kind = Kind::base;
  size_t level = 0;
  size_t index = 0;

  static EncodedPoint base_point(size_t i) { return {Kind::base, 0, i}; }
  static EncodedPoint level_point(size_t n, size_t i) { return {Kind::level, n, i}; }
  static EncodedPoint infinity_point() { return {Kind::infinity, 0, 0}; }
  static EncodedPoint tag_point() { return {Kind::tag, 0, 0}; }

  friend bool operator==(const EncodedPoint& a, const EncodedPoint& b) {
    if (a.kind != b.kind) return false;
    if (a.kind == Kind::infinity || a.kind == Kind::tag) return true;
    if (a.kind == Kind::level && a.level != b.level) return false;
    return a.index == b.index;
  }
  friend bool operator!=(const EncodedPoint& a, const EncodedPoint& b) { return !(a == b); }
};

enum class ScaleMode { raw, unit };

// An encoded structure. Distances are computed on demand from the source, so
// levels beyond level_cap stay queryable; level_cap only bounds how many
// level copies materialization and exhaustive checks enumerate. Raw mode
// keeps the diameter-6 distances the formulas are written in; unit mode
// divides by 6 on output.
struct EncodedSpace {
  std::optional<FinitePresentation> finite_source;
  std::optional<OraclePresentation> oracle_source;
  size_t level_cap = 6;
  ScaleMode scale = ScaleMode::raw;
  std::vector<std::string> enumeration;

  size_t universe_size() const {
    if (finite_source) return finite_source->point_count(0);
    if (oracle_source) return oracle_source->sort_sizes.at(0);
    throw input_error("encoded space has no source");
  }

  // Points of the finite-tier materialization.
  size_t point_count() const { return universe_size() * (level_cap + 1) + 2; }
};

namespace detail {

inline void check_encoded_point(const EncodedSpace& x, const EncodedPoint& p) {
  if (p.kind == EncodedPoint::Kind::base || p.kind == EncodedPoint::Kind::level) {
    if (p.index >= x.universe_size()) throw input_error("encoded point index out of range");
  }
}

// Source predicate P_n; predicates beyond the enumeration are constant zero.
inline Rational source_predicate(const EncodedSpace& x, size_t n, size_t i, size_t j) {
  if (n >= x.enumeration.size()) return Rational(0);
  return x.finite_source->tables[n].at({i, j});
}

inline IntervalValue source_predicate_iv(const EncodedSpace& x, size_t n, size_t i, size_t j,
                                         long k) {
  if (n >= x.enumeration.size()) return IntervalValue::exact(Rational(0));
  if (x.finite_source) return IntervalValue::exact(source_predicate(x, n, i, j));
  return x.oracle_source->pred(n, {i, j}, static_cast<int>(k));
}

inline IntervalValue source_distance_iv(const EncodedSpace& x, size_t i, size_t j, long k) {
  if (x.finite_source) return IntervalValue::exact(x.finite_source->dist(0, i, j));
  return x.oracle_source->dist(0, i, j, static_cast<int>(k));
}

// The case-list metric in raw units, on top of interval-valued source
// queries so the finite and oracle tiers share one implementation. Every
// case is an affine map of at most one source query with slope at most 1,
// so the result radius never exceeds the query radius.
inline IntervalValue encoded_distance_cases(const EncodedSpace& x, EncodedPoint p, EncodedPoint q,
                                            long k) {
  using Kind = EncodedPoint::Kind;
  check_encoded_point(x, p);
  check_encoded_point(x, q);
  if (p == q) return IntervalValue::exact(Rational(0));
  // Order the variants so each unordered case appears once.
  auto rank = [](Kind kd) {
    switch (kd) {
      case Kind::base: return 0;
      case Kind::level: return 1;
      case Kind::infinity: return 2;
      case Kind::tag: return 3;
    }
    throw input_error("unknown encoded point variant");
  };
  if (rank(p.kind) > rank(q.kind)) std::swap(p, q);

  if (p.kind == Kind::base) {
    switch (q.kind) {
      case Kind::base: return source_distance_iv(x, p.index, q.index, k);
      case Kind::level:
        return iv_add(IntervalValue::exact(Rational(2)),
                      iv_scale(pow2(-long(q.level) - 1),
                               source_distance_iv(x, p.index, q.index, k)));
      case Kind::infinity: return IntervalValue::exact(Rational(2));
      case Kind::tag: return IntervalValue::exact(Rational(5));
      default: break;
    }
  }
  if (p.kind == Kind::level) {
    switch (q.kind) {
      case Kind::level: {
        size_t n = p.level, m = q.level;
        if (n > m) std::swap(p, q), std::swap(n, m);
        if (n == m)
          return iv_scale(pow2(-long(n)), source_distance_iv(x, p.index, q.index, k));
        if (m == n + 1)
          // The lower-level point is the predicate's first argument.
          return iv_scale(pow2(-long(n) - 1),
                          iv_add(IntervalValue::exact(Rational(1)),
                                 source_predicate_iv(x, n, p.index, q.index, k)));
        return IntervalValue::exact(pow2(-long(n)) - pow2(-long(m)));
      }
      case Kind::infinity: return IntervalValue::exact(pow2(-long(p.level)));
      case Kind::tag: return IntervalValue::exact(Rational(4) + pow2(-long(p.level) - 1));
      default: break;
    }
  }
  if (p.kind == Kind::infinity && q.kind == Kind::tag)
    return IntervalValue::exact(Rational(4));
  throw input_error("unknown encoded point variant");
}

inline Rational apply_scale(const EncodedSpace& x, const Rational& raw) {
  return x.scale == ScaleMode::unit ? raw / 6 : raw;
}

}  // namespace detail

// Exact distance in the space's scale mode. Finite tier only.
inline Rational encoded_distance(const EncodedSpace& x, EncodedPoint p, EncodedPoint q) {
  if (!x.finite_source) throw input_error("exact distances need a finite source");
  return detail::apply_scale(x, detail::encoded_distance_cases(x, p, q, 0).center);
}

// Dyadic distance within 2^-k, on either tier. The source is queried at
// k+3; the case formulas have slope at most 1 and the final rounding adds
// at most 2^-(k+1), so the total error stays under 2^-k.
inline Rational encoded_distance_dyadic(const EncodedSpace& x, EncodedPoint p, EncodedPoint q,
                                        long k) {
  if (k < 0) throw input_error("precision must be nonnegative");
  IntervalValue raw = detail::encoded_distance_cases(x, p, q, k + 3);
  return round_to_dyadic(detail::apply_scale(x, raw.center), static_cast<unsigned>(k));
}

namespace detail {

inline void require_encodable_shape(const Signature& sig, size_t sort_count) {
  if (sort_count != 1) throw input_error("encode input must be single-sorted");
  if (sig.predicates.empty())
    throw input_error("encode input needs the half-metric predicate in position 0");
  for (const auto& p : sig.predicates)
    if (p.arity != std::vector<size_t>{0, 0})
      throw input_error("encode input predicates must all be binary");
}

// The property itself, not the declared modulus: every predicate table moves
// by at most the larger coordinate distance.
inline bool table_is_one_lipschitz(const FinitePresentation& s, const PredTable& t) {
  size_t n = s.point_count(0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      for (size_t i2 = 0; i2 < n; ++i2)
        for (size_t j2 = 0; j2 < n; ++j2) {
          Rational step = rat_max(s.dist(0, i, i2), s.dist(0, j, j2));
          if (rat_abs(t.at({i, j}) - t.at({i2, j2})) > step) return false;
        }
  return true;
}

}  // namespace detail

// Builds the encoded space over a normalized presentation: single sort, all
// predicates binary, first predicate exactly half the metric. Validation
// can be skipped to construct deliberately broken spaces for tamper tests.
inline EncodedSpace encode(const FinitePresentation& s, size_t level_cap = 6,
                           ScaleMode scale = ScaleMode::raw, bool skip_validation = false) {
  detail::require_encodable_shape(s.signature, s.sort_count());
  size_t n = s.point_count(0);
  if (s.tables.size() != s.signature.predicates.size())
    throw input_error("encode input value tables do not match the predicate list");
  for (const auto& t : s.tables)
    if (t.shape() != std::vector<size_t>{n, n})
      throw input_error("encode input value tables must cover all point pairs");
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      if (2 * s.tables[0].at({i, j}) != s.dist(0, i, j))
        throw input_error("encode input predicate 0 must be half the metric");
  if (!skip_validation) {
    ValidationReport report = validate_structure(s);
    if (!report.ok()) throw validation_error("encode input invalid:\n" + report.to_string());
    for (size_t t = 0; t < s.tables.size(); ++t)
      if (!detail::table_is_one_lipschitz(s, s.tables[t]))
        throw validation_error("encode input predicate " + s.signature.predicates[t].name +
                               " is not 1-Lipschitz");
  }
  EncodedSpace x;
  x.finite_source = s;
  x.level_cap = level_cap;
  x.scale = scale;
  for (const auto& p : s.signature.predicates) x.enumeration.push_back(p.name);
  return x;
}

// Oracle-tier variant: the shape is checked against the declared signature;
// the half-metric and Lipschitz conditions are the caller's contract since
// they are not decidable from finite-precision queries.
inline EncodedSpace encode_oracle(const OraclePresentation& o, size_t level_cap = 6,
                                  ScaleMode scale = ScaleMode::raw) {
  detail::require_encodable_shape(o.signature, o.sort_sizes.size());
  EncodedSpace x;
  x.oracle_source = o;
  x.level_cap = level_cap;
  x.scale = scale;
  for (const auto& p : o.signature.predicates) x.enumeration.push_back(p.name);
  return x;
}

inline EncodedSpace rescale(EncodedSpace x, ScaleMode mode) {
  x.scale = mode;
  return x;
}

// Finite-tier point list in materialization order: the base copy, levels
// 0..level_cap-1, then the overflow and tag points.
inline std::vector<EncodedPoint> encoded_points(const EncodedSpace& x) {
  std::vector<EncodedPoint> pts;
  size_t n = x.universe_size();
  for (size_t i = 0; i < n; ++i) pts.push_back(EncodedPoint::base_point(i));
  for (size_t lvl = 0; lvl < x.level_cap; ++lvl)
    for (size_t i = 0; i < n; ++i) pts.push_back(EncodedPoint::level_point(lvl, i));
  pts.push_back(EncodedPoint::infinity_point());
  pts.push_back(EncodedPoint::tag_point());
  return pts;
}

inline size_t materialized_index(const EncodedSpace& x, const EncodedPoint& p) {
  detail::check_encoded_point(x, p);
  size_t n = x.universe_size();
  switch (p.kind) {
    case EncodedPoint::Kind::base: return p.index;
    case EncodedPoint::Kind::level:
      if (p.level >= x.level_cap) throw input_error("level not materialized");
      return n * (p.level + 1) + p.index;
    case EncodedPoint::Kind::infinity: return n * (x.level_cap + 1);
    case EncodedPoint::Kind::tag: return n * (x.level_cap + 1) + 1;
  }
  throw input_error("unknown encoded point variant");
}

struct EncodedArtifact {
  FinitePresentation space;
  Json metadata;
};

// Materializes the finite tier as a plain metric space: the signature is
// empty, so everything the decoder needs must come back out of the metric.
inline EncodedArtifact materialize(const EncodedSpace& x) {
  if (!x.finite_source) throw input_error("materialization needs a finite source");
  const FinitePresentation& src = *x.finite_source;

  EncodedArtifact out;
  out.space.signature.sorts = {src.signature.sorts[0]};
  out.space.signature.home_sort = 0;

  std::vector<EncodedPoint> pts = encoded_points(x);
  std::vector<std::string> names;
  for (const EncodedPoint& p : pts) {
    switch (p.kind) {
      case EncodedPoint::Kind::base:
        names.push_back(unique_name(src.points[0][p.index], names));
        break;
      case EncodedPoint::Kind::level:
        names.push_back(
            unique_name(src.points[0][p.index] + "@" + std::to_string(p.level), names));
        break;
      case EncodedPoint::Kind::infinity: names.push_back(unique_name("inf", names)); break;
      case EncodedPoint::Kind::tag: names.push_back(unique_name("tag", names)); break;
    }
  }
  out.space.points = {names};

  SymMatrix m(pts.size());
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      m.set(i, j, encoded_distance(x, pts[i], pts[j]));
  out.space.metric = {m};

  out.metadata = Json::object();
  out.metadata["scale"] = x.scale == ScaleMode::unit ? "1/6" : "1";
  out.metadata["level_cap"] = x.level_cap;
  out.metadata["enumeration"] = x.enumeration;
  return out;
}

inline Json encoded_to_json(const EncodedSpace& x) {
  EncodedArtifact a = materialize(x);
  Json j = presentation_to_json(a.space);
  j["metadata"] = a.metadata;
  return j;
}

// The alternative encoding for signatures with finitely many sorts and
// bounded arity: a graph of node sets joined by edge metrics in [2,3], all
// non-adjacent nodes at distance 4, and a tag at per-node distances in
// [5,6). Node kinds: a main copy per sort, and per distinct predicate arity
// shape a product copy, one factor copy per coordinate, and a copy of the
// interval set {2^-s} ∪ {0} carrying the predicate values.
struct GraphNode {
  std::string kind;
  std::string label;
  size_t first = 0;
  size_t count = 0;
  size_t sort = 0;                  // main, factor: source sort
  size_t product = 0;               // product, factor, interval: shape group
  size_t coordinate = 0;            // factor: which coordinate it projects
  std::vector<size_t> shape;        // product: factor sort indices
  std::vector<size_t> predicates;   // product: enumerated predicate indices
  std::vector<Rational> values;     // interval: point values, 0 last
};

struct GraphEncodedSpace {
  FinitePresentation space;
  std::vector<GraphNode> nodes;
  size_t tag_index = 0;
  Json metadata;
};

inline GraphEncodedSpace encode_finite_sorts(const FinitePresentation& s,
                                             bool skip_validation = false) {
  if (s.signature.sorts.empty()) throw input_error("graph encode input needs at least one sort");
  if (s.points.size() != s.sort_count() || s.metric.size() != s.sort_count() ||
      s.tables.size() != s.signature.predicates.size())
    throw input_error("graph encode input tables do not match the signature");
  for (size_t t = 0; t < s.tables.size(); ++t)
    if (s.tables[t].shape() != s.table_shape(t))
      throw input_error("graph encode input value tables must cover all tuples");
  if (!skip_validation) {
    ValidationReport report = validate_structure(s);
    if (!report.ok())
      throw validation_error("graph encode input invalid:\n" + report.to_string());
    for (size_t t = 0; t < s.tables.size(); ++t) {
      const auto& arity = s.signature.predicates[t].arity;
      std::vector<size_t> shape = s.table_shape(t);
      bool ok = true;
      for_each_tuple(shape, [&](const std::vector<size_t>& a) {
        for_each_tuple(shape, [&](const std::vector<size_t>& b) {
          Rational step(0);
          for (size_t i = 0; i < arity.size(); ++i)
            step = rat_max(step, s.dist(arity[i], a[i], b[i]));
          if (rat_abs(s.tables[t].at(a) - s.tables[t].at(b)) > step) ok = false;
        });
      });
      if (!ok)
        throw validation_error("graph encode input predicate " +
                               s.signature.predicates[t].name + " is not 1-Lipschitz");
    }
  }

  GraphEncodedSpace g;

  // Group predicates by their exact arity shape, in first-occurrence order.
  std::vector<std::vector<size_t>> shapes;
  std::vector<std::vector<size_t>> shape_preds;
  for (size_t t = 0; t < s.signature.predicates.size(); ++t) {
    const auto& arity = s.signature.predicates[t].arity;
    size_t g_idx = shapes.size();
    for (size_t u = 0; u < shapes.size(); ++u)
      if (shapes[u] == arity) { g_idx = u; break; }
    if (g_idx == shapes.size()) {
      shapes.push_back(arity);
      shape_preds.push_back({});
    }
    shape_preds[g_idx].push_back(t);
  }

  std::vector<std::string> names;
  auto add_point = [&](const std::string& base) {
    names.push_back(unique_name(base, names));
  };

  for (size_t n = 0; n < s.sort_count(); ++n) {
    GraphNode node;
    node.kind = "main";
    node.label = s.signature.sorts[n];
    node.sort = n;
    node.first = names.size();
    node.count = s.point_count(n);
    for (const auto& nm : s.points[n]) add_point(nm);
    g.nodes.push_back(node);
  }
  for (size_t m = 0; m < shapes.size(); ++m) {
    GraphNode prod;
    prod.kind = "product";
    prod.label = "N" + std::to_string(m);
    prod.product = m;
    prod.shape = shapes[m];
    prod.predicates = shape_preds[m];
    prod.first = names.size();
    std::vector<size_t> extents;
    for (size_t srt : shapes[m]) extents.push_back(s.point_count(srt));
    for_each_tuple(extents, [&](const std::vector<size_t>& tup) {
      std::string nm;
      for (size_t i = 0; i < tup.size(); ++i) {
        if (i) nm += "|";
        nm += s.points[shapes[m][i]][tup[i]];
      }
      add_point(nm.empty() ? "unit" : nm);
      ++prod.count;
    });
    g.nodes.push_back(prod);

    for (size_t i = 0; i < shapes[m].size(); ++i) {
      GraphNode fac;
      fac.kind = "factor";
      fac.label = s.signature.sorts[shapes[m][i]];
      fac.sort = shapes[m][i];
      fac.product = m;
      fac.coordinate = i;
      fac.first = names.size();
      fac.count = s.point_count(shapes[m][i]);
      for (const auto& nm : s.points[shapes[m][i]]) add_point(nm);
      g.nodes.push_back(fac);
    }

    GraphNode iv;
    iv.kind = "interval";
    iv.label = "I" + std::to_string(m);
    iv.product = m;
    iv.first = names.size();
    // One value per predicate on this shape plus one padding point whose
    // virtual predicate is zero, then the limit point 0.
    for (size_t sidx = 0; sidx <= shape_preds[m].size(); ++sidx)
      iv.values.push_back(pow2(-long(sidx)));
    iv.values.push_back(Rational(0));
    iv.count = iv.values.size();
    for (const auto& v : iv.values) add_point(format_rational(v));
    g.nodes.push_back(iv);
  }

  g.tag_index = names.size();
  add_point("t");

  size_t total = names.size();
  SymMatrix metric(total);

  // Node-set interior metrics and the default cross-node distance.
  size_t node_count = g.nodes.size();
  for (size_t a = 0; a < node_count; ++a) {
    const GraphNode& na = g.nodes[a];
    for (size_t i = 0; i < na.count; ++i)
      for (size_t j = i + 1; j < na.count; ++j) {
        Rational d;
        if (na.kind == "main" || na.kind == "factor") {
          d = s.dist(na.sort, i, j);
        } else if (na.kind == "interval") {
          d = rat_abs(na.values[i] - na.values[j]);
        } else {
          std::vector<size_t> ti, tj;
          size_t ri = i, rj = j;
          for (size_t c = na.shape.size(); c-- > 0;) {
            size_t ext = s.point_count(na.shape[c]);
            ti.insert(ti.begin(), ri % ext);
            tj.insert(tj.begin(), rj % ext);
            ri /= ext;
            rj /= ext;
          }
          d = Rational(0);
          for (size_t c = 0; c < na.shape.size(); ++c)
            d = rat_max(d, s.dist(na.shape[c], ti[c], tj[c]));
        }
        metric.set(na.first + i, na.first + j, d);
      }
    for (size_t b = a + 1; b < node_count; ++b) {
      const GraphNode& nb = g.nodes[b];
      for (size_t i = 0; i < na.count; ++i)
        for (size_t j = 0; j < nb.count; ++j)
          metric.set(na.first + i, nb.first + j, Rational(4));
    }
  }

  // Edges. Main copy to each factor copy of the same sort: 2 + d.
  for (const GraphNode& fac : g.nodes) {
    if (fac.kind != "factor") continue;
    const GraphNode* main = nullptr;
    for (const GraphNode& cand : g.nodes)
      if (cand.kind == "main" && cand.sort == fac.sort) main = &cand;
    for (size_t i = 0; i < main->count; ++i)
      for (size_t j = 0; j < fac.count; ++j)
        metric.set(main->first + i, fac.first + j, Rational(2) + s.dist(fac.sort, i, j));
  }

  for (const GraphNode& prod : g.nodes) {
    if (prod.kind != "product") continue;
    std::vector<size_t> extents;
    for (size_t srt : prod.shape) extents.push_back(s.point_count(srt));
    size_t offset = 0;
    for_each_tuple(extents, [&](const std::vector<size_t>& tup) {
      size_t p_idx = prod.first + offset;
      // Projection edges to this product's factor copies: 2 + d(x_i, y).
      for (const GraphNode& fac : g.nodes) {
        if (fac.kind != "factor" || fac.product != prod.product) continue;
        for (size_t j = 0; j < fac.count; ++j)
          metric.set(p_idx, fac.first + j,
                     Rational(2) + s.dist(fac.sort, tup[fac.coordinate], j));
      }
      // Coupling edges to this product's interval copy: the s-th interval
      // point carries the s-th predicate on this shape, halved per level to
      // keep the interval's own metric a lower bound for value differences.
      for (const GraphNode& iv : g.nodes) {
        if (iv.kind != "interval" || iv.product != prod.product) continue;
        for (size_t j = 0; j < iv.count; ++j) {
          Rational coupling(0);
          if (iv.values[j] != 0 && j < prod.predicates.size())
            coupling = pow2(-long(j) - 1) * s.tables[prod.predicates[j]].at(tup);
          metric.set(p_idx, iv.first + j, Rational(2) + coupling);
        }
      }
      ++offset;
    });
  }

  // Tag distances: evenly spaced per node so every node set has a distinct
  // distance band, which is what makes each node definable from the metric.
  std::vector<std::string> tag_distances;
  for (size_t a = 0; a < node_count; ++a) {
    Rational td = Rational(5) + Rational(Integer(a), Integer(node_count + 1));
    for (size_t i = 0; i < g.nodes[a].count; ++i)
      metric.set(g.nodes[a].first + i, g.tag_index, td);
    tag_distances.push_back(format_rational(td));
  }

  g.space.signature.sorts = {"X"};
  g.space.signature.home_sort = 0;
  g.space.points = {names};
  g.space.metric = {metric};

  // The construction is only a metric if the input was 1-Lipschitz; the
  // exhaustive scan is the final arbiter either way.
  for (size_t i = 0; i < total; ++i)
    for (size_t j = 0; j < total; ++j)
      for (size_t l = 0; l < total; ++l)
        if (g.space.metric[0].at(i, j) >
            g.space.metric[0].at(i, l) + g.space.metric[0].at(l, j))
          throw validation_error("graph encoding violates the triangle inequality at (" +
                                 names[i] + ", " + names[l] + ", " + names[j] + ")");

  g.metadata = Json::object();
  Json node_list = Json::array();
  for (size_t a = 0; a < node_count; ++a) {
    const GraphNode& n = g.nodes[a];
    Json jn = Json::object();
    jn["kind"] = n.kind;
    jn["label"] = n.label;
    jn["first"] = n.first;
    jn["count"] = n.count;
    jn["tag_distance"] = tag_distances[a];
    node_list.push_back(jn);
  }
  g.metadata["nodes"] = node_list;
  g.metadata["tag"] = g.tag_index;
  return g;
}

}  // namespace mscodec
