#pragma once

#include "json_io.hpp"
#include "modulus_toolkit.hpp"
#include "presentation.hpp"
#include "validate.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mscodec {

// One pipeline stage's record: which stage ran, whether its postcondition
// already held (skipped), and the data needed to reconstruct the stage input
// from the stage output.
struct StageTrace {
  std::string stage;
  bool skipped = false;
  Json payload;
};

using PipelineTrace = std::vector<StageTrace>;

struct PipelineResult {
  FinitePresentation structure;
  PipelineTrace trace;
};

inline const std::vector<std::string>& pipeline_stage_names() {
  static const std::vector<std::string> names = {"reduce", "merge", "uuc", "lipschitz", "binarize"};
  return names;
}

// Number of stages to run so that the named stage is the last one.
inline int pipeline_stage_prefix(const std::string& name) {
  const auto& names = pipeline_stage_names();
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return int(i) + 1;
  throw input_error("unknown pipeline stage \"" + name + "\"");
}

// The modulus of an off-domain-extended predicate on the merged space:
// min{max{delta(min{2^N x, 1}), 2^{N+1} x}, 1} where N is the largest sort
// position among the predicate's arguments. The first branch covers pairs
// inside the domain (where merged distances are the originals shrunk by at
// most 2^N); the second reaches 1 at 2^{-N-1}, the least merged distance
// between a domain point and anything outside it.
inline PLFunction delta_star(const PLFunction& delta, int N) {
  PLFunction inside = pl_compose(delta, PLFunction::lipschitz_modulus(pow2(N)));
  PLFunction across = pl_scale(pow2(N + 1), PLFunction::identity());
  return pl_clamp01(pl_max(inside, across));
}

namespace detail {

inline std::vector<std::string> all_point_names(const FinitePresentation& s) {
  std::vector<std::string> names;
  for (const auto& per_sort : s.points)
    for (const auto& n : per_sort) names.push_back(n);
  return names;
}

inline std::vector<std::string> predicate_names(const Signature& sig) {
  std::vector<std::string> names;
  for (const auto& p : sig.predicates) names.push_back(p.name);
  return names;
}

inline Json arity_names(const Signature& sig, const std::vector<size_t>& arity) {
  Json out = Json::array();
  for (size_t sort : arity) out.push_back(sig.sorts.at(sort));
  return out;
}

}  // namespace detail

// Replaces every predicate of arity 3 or more by a unary predicate on a new
// product sort (max metric over the factors) plus one binary projection
// predicate per factor. Predicates of arity 2 or less pass through.
inline std::pair<FinitePresentation, StageTrace> reduce_arity(const FinitePresentation& s) {
  StageTrace trace;
  trace.stage = "reduce";

  bool needed = false;
  for (const auto& p : s.signature.predicates) needed |= p.arity.size() >= 3;
  if (!needed) {
    trace.skipped = true;
    trace.payload = Json::object();
    return {s, trace};
  }

  FinitePresentation out;
  out.signature.sorts = s.signature.sorts;
  out.signature.home_sort = s.signature.home_sort;
  out.points = s.points;
  out.metric = s.metric;

  Json records = Json::array();
  for (size_t pi = 0; pi < s.signature.predicates.size(); ++pi) {
    const PredicateDecl& p = s.signature.predicates[pi];
    Json rec;
    rec["name"] = p.name;
    rec["arity"] = detail::arity_names(s.signature, p.arity);
    rec["modulus"] = pl_to_json(p.modulus);
    if (p.arity.size() < 3) {
      rec["kind"] = "pass";
      out.signature.predicates.push_back(p);
      out.tables.push_back(s.tables[pi]);
      records.push_back(std::move(rec));
      continue;
    }
    rec["kind"] = "reduced";

    // Product sort: one point per argument tuple, in row-major tuple order,
    // with the maximum of the component metrics.
    size_t prod_sort = out.signature.sorts.size();
    std::string prod_name = unique_name("prod_" + p.name, out.signature.sorts);
    out.signature.sorts.push_back(prod_name);
    rec["product_sort"] = prod_name;

    std::vector<size_t> shape;
    for (size_t sort : p.arity) shape.push_back(s.point_count(sort));
    std::vector<std::vector<size_t>> tuples;
    for_each_tuple(shape, [&](const std::vector<size_t>& t) { tuples.push_back(t); });

    std::vector<std::string> prod_points;
    for (const auto& t : tuples) {
      std::string label;
      for (size_t k = 0; k < t.size(); ++k) {
        if (k) label += "|";
        label += s.points[p.arity[k]][t[k]];
      }
      prod_points.push_back(unique_name(label, prod_points));
    }
    out.points.push_back(prod_points);

    SymMatrix prod_metric(tuples.size());
    for (size_t i = 0; i < tuples.size(); ++i)
      for (size_t j = i + 1; j < tuples.size(); ++j)
        prod_metric.set(i, j, tuple_max_distance(s, p.arity, tuples[i], tuples[j]));
    out.metric.push_back(std::move(prod_metric));

    // Value predicate: the original table, flattened onto the product sort.
    std::string vname = unique_name(p.name + "_prod", detail::predicate_names(out.signature));
    out.signature.predicates.push_back({vname, {prod_sort}, p.modulus});
    PredTable vtable({tuples.size()});
    for (size_t i = 0; i < tuples.size(); ++i) vtable.set({i}, s.tables[pi].at(tuples[i]));
    out.tables.push_back(std::move(vtable));
    rec["value_predicate"] = vname;

    // Projection predicates pi_k(tuple, y) = d(tuple_k, y), one per factor.
    Json projections = Json::array();
    for (size_t k = 0; k < p.arity.size(); ++k) {
      std::string pname =
          unique_name(p.name + "_pi" + std::to_string(k), detail::predicate_names(out.signature));
      out.signature.predicates.push_back(
          {pname, {prod_sort, p.arity[k]}, PLFunction::lipschitz_modulus(Rational(2))});
      PredTable ptable({tuples.size(), s.point_count(p.arity[k])});
      for (size_t i = 0; i < tuples.size(); ++i)
        for (size_t y = 0; y < s.point_count(p.arity[k]); ++y)
          ptable.set({i, y}, s.dist(p.arity[k], tuples[i][k], y));
      out.tables.push_back(std::move(ptable));
      projections.push_back(pname);
    }
    rec["projections"] = std::move(projections);
    records.push_back(std::move(rec));
  }

  trace.payload["original_sort_count"] = s.sort_count();
  trace.payload["original_predicates"] = std::move(records);
  return {out, trace};
}

// Collapses all sorts into the one-sorted union {*} + sum of O_n with the
// scaled case-list metric, extends every predicate by the value 1 outside
// its domain, and appends the distance predicate Q of {*}. The sort order
// puts the home sort at position 0 and keeps declaration order otherwise.
inline std::pair<FinitePresentation, StageTrace> merge_sorts_cmdu(const FinitePresentation& s,
                                                                  std::vector<size_t> sort_order) {
  StageTrace trace;
  trace.stage = "merge";

  for (const auto& p : s.signature.predicates)
    if (p.arity.size() > 2) throw input_error("merge requires arity at most 2");
  if (sort_order.size() != s.sort_count()) throw input_error("sort order must cover every sort");
  if (!sort_order.empty() && sort_order[0] != s.signature.home_sort)
    throw input_error("home sort must come first in the sort order");
  {
    std::vector<bool> seen(s.sort_count(), false);
    for (size_t sort : sort_order) {
      if (sort >= s.sort_count() || seen[sort]) throw input_error("sort order must cover every sort");
      seen[sort] = true;
    }
  }

  if (s.sort_count() == 1) {
    trace.skipped = true;
    trace.payload = Json::object();
    return {s, trace};
  }

  // Positions: sort s sits at position pos[s] and is scaled by 2^-pos[s].
  std::vector<size_t> pos(s.sort_count());
  for (size_t n = 0; n < sort_order.size(); ++n) pos[sort_order[n]] = n;

  FinitePresentation out;
  std::string star = unique_name("*", detail::all_point_names(s));
  out.signature.sorts = {"U"};
  out.signature.home_sort = 0;

  std::vector<std::string> merged;
  merged.push_back(star);
  std::vector<size_t> offset(s.sort_count(), 0);
  for (size_t n = 0; n < sort_order.size(); ++n) {
    size_t sort = sort_order[n];
    offset[sort] = merged.size();
    for (const auto& name : s.points[sort]) merged.push_back(unique_name(name, merged));
  }
  size_t total = merged.size();
  out.points = {merged};

  SymMatrix m(total);
  for (size_t n = 0; n < sort_order.size(); ++n) {
    size_t sort = sort_order[n];
    Rational scale = pow2(-long(n));
    for (size_t i = 0; i < s.point_count(sort); ++i) {
      m.set(offset[sort] + i, 0, scale);
      for (size_t j = i + 1; j < s.point_count(sort); ++j)
        m.set(offset[sort] + i, offset[sort] + j, scale * s.dist(sort, i, j));
    }
    for (size_t nn = n + 1; nn < sort_order.size(); ++nn) {
      size_t other = sort_order[nn];
      Rational gap = pow2(-long(n)) - pow2(-long(nn));
      for (size_t i = 0; i < s.point_count(sort); ++i)
        for (size_t j = 0; j < s.point_count(other); ++j)
          m.set(offset[sort] + i, offset[other] + j, gap);
    }
  }
  out.metric = {std::move(m)};

  Json records = Json::array();
  for (size_t pi = 0; pi < s.signature.predicates.size(); ++pi) {
    const PredicateDecl& p = s.signature.predicates[pi];
    int N = 0;
    for (size_t sort : p.arity) N = std::max(N, int(pos[sort]));
    PredicateDecl extended;
    extended.name = p.name;
    extended.arity.assign(p.arity.size(), 0);
    extended.modulus = delta_star(p.modulus, N);
    out.signature.predicates.push_back(extended);

    std::vector<size_t> shape(p.arity.size(), total);
    PredTable table(shape);
    for_each_tuple(shape, [&](const std::vector<size_t>& tuple) {
      std::vector<size_t> orig(tuple.size());
      for (size_t k = 0; k < tuple.size(); ++k) {
        size_t sort = p.arity[k];
        size_t off = offset[sort];
        if (tuple[k] < off || tuple[k] >= off + s.point_count(sort)) {
          table.set(tuple, Rational(1));
          return;
        }
        orig[k] = tuple[k] - off;
      }
      table.set(tuple, s.tables[pi].at(orig));
    });
    out.tables.push_back(std::move(table));

    Json rec;
    rec["name"] = p.name;
    rec["arity"] = detail::arity_names(s.signature, p.arity);
    rec["modulus"] = pl_to_json(p.modulus);
    records.push_back(std::move(rec));
  }

  // Q(x) = d(x, *), the distance predicate of the overflow point.
  std::string q_name = unique_name("Q", detail::predicate_names(out.signature));
  out.signature.predicates.push_back({q_name, {0}, PLFunction::identity()});
  PredTable q_table({total});
  for (size_t i = 0; i < total; ++i) q_table.set({i}, out.dist(0, 0, i));
  out.tables.push_back(std::move(q_table));

  trace.payload["star"] = star;
  trace.payload["q_name"] = q_name;
  trace.payload["home_sort"] = s.signature.sorts[s.signature.home_sort];
  Json order = Json::array();
  for (size_t n = 0; n < sort_order.size(); ++n) {
    size_t sort = sort_order[n];
    Json entry;
    entry["sort"] = s.signature.sorts[sort];
    entry["points"] = s.points[sort];
    order.push_back(std::move(entry));
  }
  trace.payload["order"] = std::move(order);
  trace.payload["original_sorts"] = s.signature.sorts;
  trace.payload["original_predicates"] = std::move(records);
  return {out, trace};
}

inline std::pair<FinitePresentation, StageTrace> merge_sorts_cmdu(const FinitePresentation& s) {
  std::vector<size_t> order;
  order.push_back(s.signature.home_sort);
  for (size_t sort = 0; sort < s.sort_count(); ++sort)
    if (sort != s.signature.home_sort) order.push_back(sort);
  return merge_sorts_cmdu(s, std::move(order));
}

// Rescales predicate i to Q_i = 2^-(i+1) P_i and declares every Q_i with the
// one shared modulus sum 2^-(i+1) Delta_i, making the family uniformly
// uniformly continuous.
inline std::pair<FinitePresentation, StageTrace> uuc_normalize(const FinitePresentation& s) {
  StageTrace trace;
  trace.stage = "uuc";

  bool common = true;
  for (const auto& p : s.signature.predicates) common &= p.modulus == s.signature.predicates[0].modulus;
  if (s.signature.predicates.empty() || common) {
    trace.skipped = true;
    trace.payload = Json::object();
    return {s, trace};
  }

  std::vector<PLFunction> moduli;
  for (const auto& p : s.signature.predicates) moduli.push_back(p.modulus);
  PLFunction delta = tail_sum(moduli, moduli.size()).first;

  FinitePresentation out;
  out.signature.sorts = s.signature.sorts;
  out.signature.home_sort = s.signature.home_sort;
  out.points = s.points;
  out.metric = s.metric;

  Json records = Json::array();
  for (size_t i = 0; i < s.signature.predicates.size(); ++i) {
    const PredicateDecl& p = s.signature.predicates[i];
    std::string new_name = "Q" + std::to_string(i);
    out.signature.predicates.push_back({new_name, p.arity, delta});
    Rational weight = pow2(-long(i) - 1);
    PredTable table(s.tables[i].shape());
    for_each_tuple(table.shape(), [&](const std::vector<size_t>& t) {
      table.set(t, weight * s.tables[i].at(t));
    });
    out.tables.push_back(std::move(table));

    Json rec;
    rec["name"] = p.name;
    rec["new_name"] = new_name;
    rec["index"] = i;
    rec["modulus"] = pl_to_json(p.modulus);
    records.push_back(std::move(rec));
  }

  trace.payload["common_modulus"] = pl_to_json(delta);
  trace.payload["predicates"] = std::move(records);
  return {out, trace};
}

// Concave-majorant metric change making every predicate 1-Lipschitz. Adds
// the safeguard P_{d,O} = half the current metric per sort first, so the
// original metric survives clipping, then replaces each d by
// max{alpha_plus(d), d} with alpha_plus = max{clamp(majorant of Delta), id}.
// The majorant of a piecewise linear modulus is computed exactly (its hull
// needs no grid), so the certified gap added on top of it is zero.
inline std::pair<FinitePresentation, StageTrace> lipschitzify(const FinitePresentation& s) {
  StageTrace trace;
  trace.stage = "lipschitz";

  for (const auto& p : s.signature.predicates)
    if (!(p.modulus == s.signature.predicates[0].modulus))
      throw input_error("lipschitzify requires a common declared modulus");

  bool all_identity = true;
  for (const auto& p : s.signature.predicates) all_identity &= p.modulus == PLFunction::identity();
  if (all_identity) {
    trace.skipped = true;
    trace.payload = Json::object();
    return {s, trace};
  }

  PLFunction delta = s.signature.predicates[0].modulus;
  PLFunction alpha = concave_hull_exact(delta);
  PLFunction alpha_plus = pl_max(pl_clamp01(alpha), PLFunction::identity());

  FinitePresentation out;
  out.signature.sorts = s.signature.sorts;
  out.signature.home_sort = s.signature.home_sort;
  out.points = s.points;

  for (const auto& p : s.signature.predicates) {
    out.signature.predicates.push_back({p.name, p.arity, PLFunction::identity()});
  }
  out.tables = s.tables;

  // Safeguard predicates hold the pre-change metric, halved.
  Json added = Json::array();
  for (size_t sort = 0; sort < s.sort_count(); ++sort) {
    std::string name =
        unique_name("Pd_" + s.signature.sorts[sort], detail::predicate_names(out.signature));
    out.signature.predicates.push_back({name, {sort, sort}, PLFunction::identity()});
    size_t n = s.point_count(sort);
    PredTable table({n, n});
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) table.set({i, j}, s.dist(sort, i, j) / 2);
    out.tables.push_back(std::move(table));
    Json rec;
    rec["sort"] = s.signature.sorts[sort];
    rec["name"] = name;
    added.push_back(std::move(rec));
  }

  for (size_t sort = 0; sort < s.sort_count(); ++sort) {
    size_t n = s.point_count(sort);
    SymMatrix m(n);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) {
        const Rational& d = s.dist(sort, i, j);
        m.set(i, j, rat_max(alpha_plus(d), d));
      }
    out.metric.push_back(std::move(m));
  }

  trace.payload["common_modulus"] = pl_to_json(delta);
  trace.payload["alpha_plus"] = pl_to_json(alpha_plus);
  trace.payload["added"] = std::move(added);
  return {out, trace};
}

// Recasts unary predicates as binary ones ignoring their second argument,
// prepends P_0 = half the metric, and renames the list to P0, P1, ... in
// signature order. Beyond the end of the list the enumeration is implicitly
// constant zero.
inline std::pair<FinitePresentation, StageTrace> binarize_and_enumerate(const FinitePresentation& s) {
  StageTrace trace;
  trace.stage = "binarize";

  if (s.sort_count() != 1) throw input_error("binarize requires a single-sorted structure");
  for (const auto& p : s.signature.predicates)
    if (p.arity.size() > 2) throw input_error("binarize requires arity at most 2");

  size_t n = s.point_count(0);
  bool done = !s.signature.predicates.empty();
  for (const auto& p : s.signature.predicates) done &= p.arity.size() == 2;
  if (done) {
    // Postcondition also needs P_0 = half the metric, exactly.
    for (size_t i = 0; i < n && done; ++i)
      for (size_t j = 0; j < n && done; ++j) done &= s.tables[0].at({i, j}) == s.dist(0, i, j) / 2;
  }
  if (done) {
    trace.skipped = true;
    trace.payload = Json::object();
    return {s, trace};
  }

  FinitePresentation out;
  out.signature.sorts = s.signature.sorts;
  out.signature.home_sort = 0;
  out.points = s.points;
  out.metric = s.metric;

  out.signature.predicates.push_back({"P0", {0, 0}, PLFunction::identity()});
  PredTable p0({n, n});
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) p0.set({i, j}, s.dist(0, i, j) / 2);
  out.tables.push_back(std::move(p0));

  Json records = Json::array();
  for (size_t pi = 0; pi < s.signature.predicates.size(); ++pi) {
    const PredicateDecl& p = s.signature.predicates[pi];
    std::string new_name = "P" + std::to_string(pi + 1);
    out.signature.predicates.push_back({new_name, {0, 0}, p.modulus});
    PredTable table({n, n});
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) {
        std::vector<size_t> args;
        if (p.arity.size() >= 1) args.push_back(i);
        if (p.arity.size() == 2) args.push_back(j);
        table.set({i, j}, s.tables[pi].at(args));
      }
    out.tables.push_back(std::move(table));

    Json rec;
    rec["name"] = p.name;
    rec["new_name"] = new_name;
    rec["arity"] = p.arity.size();
    rec["modulus"] = pl_to_json(p.modulus);
    records.push_back(std::move(rec));
  }

  trace.payload["p0_name"] = "P0";
  trace.payload["predicates"] = std::move(records);
  return {out, trace};
}

// Runs the first stage_count stages in order on a validated input. The
// optional threshold r enforces the home-sort diameter restriction.
inline PipelineResult normalize_pipeline(const FinitePresentation& s, int stage_count = 5,
                                         const Rational& r = Rational(0)) {
  if (stage_count < 1 || stage_count > 5) throw input_error("stage count must be between 1 and 5");
  ValidationReport report = validate_structure(s);
  if (!report.ok()) throw validation_error("input structure invalid:\n" + report.to_string());
  if (s.home_diameter() < r)
    throw validation_error("home sort diameter " + format_rational(s.home_diameter()) +
                           " is below the threshold " + format_rational(r));

  PipelineResult result;
  result.structure = s;
  for (int stage = 0; stage < stage_count; ++stage) {
    std::pair<FinitePresentation, StageTrace> step = [&] {
      switch (stage) {
        case 0: return reduce_arity(result.structure);
        case 1: return merge_sorts_cmdu(result.structure);
        case 2: return uuc_normalize(result.structure);
        case 3: return lipschitzify(result.structure);
        default: return binarize_and_enumerate(result.structure);
      }
    }();
    result.structure = std::move(step.first);
    result.trace.push_back(std::move(step.second));
  }
  return result;
}

// --- Inversion -------------------------------------------------------------

namespace detail {

inline PLFunction payload_pl(const Json& j, const char* key) { return pl_from_json(require(j, key)); }

inline std::vector<size_t> arity_from_names(const Signature& sig, const Json& names) {
  std::vector<size_t> arity;
  for (const auto& name : names) arity.push_back(sig.sort_index(require_string(name)));
  return arity;
}

inline FinitePresentation invert_reduce(const FinitePresentation& out, const Json& payload) {
  size_t sort_count = require(payload, "original_sort_count").get<size_t>();
  if (sort_count > out.sort_count()) throw input_error("trace does not match the structure");
  FinitePresentation in;
  in.signature.sorts.assign(out.signature.sorts.begin(), out.signature.sorts.begin() + sort_count);
  in.signature.home_sort = out.signature.home_sort;
  in.points.assign(out.points.begin(), out.points.begin() + sort_count);
  in.metric.assign(out.metric.begin(), out.metric.begin() + sort_count);

  for (const auto& rec : require(payload, "original_predicates")) {
    PredicateDecl p;
    p.name = require_string(require(rec, "name"));
    p.arity = arity_from_names(in.signature, require(rec, "arity"));
    p.modulus = payload_pl(rec, "modulus");
    std::vector<size_t> shape;
    for (size_t sort : p.arity) shape.push_back(in.point_count(sort));
    PredTable table(shape);
    if (require_string(require(rec, "kind")) == "pass") {
      size_t pi = out.signature.predicate_index(p.name);
      table = out.tables[pi];
    } else {
      // Product points are in row-major tuple order, so the flat index of a
      // tuple is its product-point index.
      size_t pi = out.signature.predicate_index(require_string(require(rec, "value_predicate")));
      for_each_tuple(shape, [&](const std::vector<size_t>& tuple) {
        table.set(tuple, out.tables[pi].at({table.flat_index(tuple)}));
      });
    }
    in.signature.predicates.push_back(std::move(p));
    in.tables.push_back(std::move(table));
  }
  return in;
}

inline FinitePresentation invert_merge(const FinitePresentation& out, const Json& payload) {
  if (out.sort_count() != 1) throw input_error("trace does not match the structure");
  const Json& order = require(payload, "order");
  std::vector<std::string> original_sorts;
  for (const auto& name : require(payload, "original_sorts"))
    original_sorts.push_back(require_string(name));

  // Position and offset of each original sort inside the merged point list.
  std::vector<size_t> position(original_sorts.size());
  std::vector<size_t> offset_of(original_sorts.size());
  std::vector<std::vector<std::string>> names_of(original_sorts.size());
  size_t offset = 1;  // skip the star
  size_t n = 0;
  for (const auto& entry : order) {
    std::string sort_name = require_string(require(entry, "sort"));
    size_t sort = 0;
    while (sort < original_sorts.size() && original_sorts[sort] != sort_name) ++sort;
    if (sort == original_sorts.size()) throw input_error("trace does not match the structure");
    position[sort] = n;
    offset_of[sort] = offset;
    for (const auto& pname : require(entry, "points"))
      names_of[sort].push_back(require_string(pname));
    offset += names_of[sort].size();
    ++n;
  }
  if (offset != out.point_count(0)) throw input_error("trace does not match the structure");

  FinitePresentation in;
  in.signature.sorts = original_sorts;
  std::string home = require_string(require(payload, "home_sort"));
  in.signature.home_sort = in.signature.sort_index(home);
  in.points = names_of;
  for (size_t sort = 0; sort < original_sorts.size(); ++sort) {
    size_t count = names_of[sort].size();
    Rational scale = pow2(long(position[sort]));
    SymMatrix m(count);
    for (size_t i = 0; i < count; ++i)
      for (size_t j = i + 1; j < count; ++j)
        m.set(i, j, scale * out.dist(0, offset_of[sort] + i, offset_of[sort] + j));
    in.metric.push_back(std::move(m));
  }

  for (const auto& rec : require(payload, "original_predicates")) {
    PredicateDecl p;
    p.name = require_string(require(rec, "name"));
    p.arity = arity_from_names(in.signature, require(rec, "arity"));
    p.modulus = payload_pl(rec, "modulus");
    size_t pi = out.signature.predicate_index(p.name);
    std::vector<size_t> shape;
    for (size_t sort : p.arity) shape.push_back(in.point_count(sort));
    PredTable table(shape);
    for_each_tuple(shape, [&](const std::vector<size_t>& tuple) {
      std::vector<size_t> merged(tuple.size());
      for (size_t k = 0; k < tuple.size(); ++k) merged[k] = offset_of[p.arity[k]] + tuple[k];
      table.set(tuple, out.tables[pi].at(merged));
    });
    in.signature.predicates.push_back(std::move(p));
    in.tables.push_back(std::move(table));
  }
  return in;
}

inline FinitePresentation invert_uuc(const FinitePresentation& out, const Json& payload) {
  FinitePresentation in;
  in.signature.sorts = out.signature.sorts;
  in.signature.home_sort = out.signature.home_sort;
  in.points = out.points;
  in.metric = out.metric;
  for (const auto& rec : require(payload, "predicates")) {
    size_t i = require(rec, "index").get<size_t>();
    size_t pi = out.signature.predicate_index(require_string(require(rec, "new_name")));
    PredicateDecl p;
    p.name = require_string(require(rec, "name"));
    p.arity = out.signature.predicates[pi].arity;
    p.modulus = payload_pl(rec, "modulus");
    Rational weight = pow2(long(i) + 1);
    PredTable table(out.tables[pi].shape());
    for_each_tuple(table.shape(), [&](const std::vector<size_t>& t) {
      table.set(t, weight * out.tables[pi].at(t));
    });
    in.signature.predicates.push_back(std::move(p));
    in.tables.push_back(std::move(table));
  }
  return in;
}

inline FinitePresentation invert_lipschitz(const FinitePresentation& out, const Json& payload) {
  PLFunction delta = payload_pl(payload, "common_modulus");
  const Json& added = require(payload, "added");
  size_t kept = out.signature.predicates.size() - added.size();

  FinitePresentation in;
  in.signature.sorts = out.signature.sorts;
  in.signature.home_sort = out.signature.home_sort;
  in.points = out.points;
  for (size_t pi = 0; pi < kept; ++pi) {
    const PredicateDecl& p = out.signature.predicates[pi];
    in.signature.predicates.push_back({p.name, p.arity, delta});
    in.tables.push_back(out.tables[pi]);
  }
  // The pre-change metric is twice the safeguard predicate, sort by sort.
  in.metric.resize(out.sort_count());
  size_t next = kept;
  for (const auto& rec : added) {
    size_t sort = in.signature.sort_index(require_string(require(rec, "sort")));
    std::string name = require_string(require(rec, "name"));
    if (out.signature.predicates[next].name != name)
      throw input_error("trace does not match the structure");
    size_t count = out.point_count(sort);
    SymMatrix m(count);
    for (size_t i = 0; i < count; ++i)
      for (size_t j = i + 1; j < count; ++j) m.set(i, j, 2 * out.tables[next].at({i, j}));
    in.metric[sort] = std::move(m);
    ++next;
  }
  return in;
}

inline FinitePresentation invert_binarize(const FinitePresentation& out, const Json& payload) {
  FinitePresentation in;
  in.signature.sorts = out.signature.sorts;
  in.signature.home_sort = out.signature.home_sort;
  in.points = out.points;
  in.metric = out.metric;
  size_t next = 1;  // skip P0
  for (const auto& rec : require(payload, "predicates")) {
    PredicateDecl p;
    p.name = require_string(require(rec, "name"));
    size_t arity = require(rec, "arity").get<size_t>();
    p.arity.assign(arity, 0);
    p.modulus = payload_pl(rec, "modulus");
    if (require_string(require(rec, "new_name")) != out.signature.predicates.at(next).name)
      throw input_error("trace does not match the structure");
    std::vector<size_t> shape(arity, out.point_count(0));
    PredTable table(shape);
    for_each_tuple(shape, [&](const std::vector<size_t>& tuple) {
      std::vector<size_t> args = {0, 0};
      for (size_t k = 0; k < tuple.size(); ++k) args[k] = tuple[k];
      table.set(tuple, out.tables[next].at(args));
    });
    in.signature.predicates.push_back(std::move(p));
    in.tables.push_back(std::move(table));
    ++next;
  }
  return in;
}

}  // namespace detail

// Reconstructs a stage's input from its output and trace record, exactly.
inline FinitePresentation invert_stage(const FinitePresentation& out, const StageTrace& trace) {
  if (trace.skipped) return out;
  if (trace.stage == "reduce") return detail::invert_reduce(out, trace.payload);
  if (trace.stage == "merge") return detail::invert_merge(out, trace.payload);
  if (trace.stage == "uuc") return detail::invert_uuc(out, trace.payload);
  if (trace.stage == "lipschitz") return detail::invert_lipschitz(out, trace.payload);
  if (trace.stage == "binarize") return detail::invert_binarize(out, trace.payload);
  throw input_error("unknown pipeline stage \"" + trace.stage + "\"");
}

inline FinitePresentation invert_pipeline(const FinitePresentation& out, const PipelineTrace& trace) {
  FinitePresentation cur = out;
  for (auto it = trace.rbegin(); it != trace.rend(); ++it) cur = invert_stage(cur, *it);
  return cur;
}

inline Json trace_to_json(const PipelineTrace& trace) {
  Json stages = Json::array();
  for (const auto& st : trace) {
    Json entry;
    entry["stage"] = st.stage;
    entry["skipped"] = st.skipped;
    entry["payload"] = st.payload;
    stages.push_back(std::move(entry));
  }
  Json out;
  out["stages"] = std::move(stages);
  return out;
}

inline PipelineTrace trace_from_json(const Json& j) {
  PipelineTrace trace;
  for (const auto& entry : detail::require(j, "stages")) {
    StageTrace st;
    st.stage = detail::require_string(detail::require(entry, "stage"));
    st.skipped = detail::require(entry, "skipped").get<bool>();
    st.payload = detail::require(entry, "payload");
    trace.push_back(std::move(st));
  }
  return trace;
}

}  // namespace mscodec
