#pragma once

#include "json_io.hpp"
#include "presentation.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mscodec {

// Where a point of an encoded space sits. Everything below reads the class
// off the distance to the tag point: 0 for the tag itself, 5 for the base
// copy, 4 for the overflow point, and 4+2^-n-1 for the level-n copy.
struct PointClass {
  enum class Label { tag, infinity, base, level };

  Label label = Label::base;
  size_t level = 0;

  static PointClass tag_class() { return {Label::tag, 0}; }
  static PointClass infinity_class() { return {Label::infinity, 0}; }
  static PointClass base_class() { return {Label::base, 0}; }
  static PointClass level_class(size_t n) { return {Label::level, n}; }

  friend bool operator==(const PointClass& a, const PointClass& b) {
    if (a.label != b.label) return false;
    return a.label != Label::level || a.level == b.level;
  }
  friend bool operator!=(const PointClass& a, const PointClass& b) { return !(a == b); }
};

namespace detail {

inline void require_plain_metric_space(const FinitePresentation& X) {
  if (X.sort_count() != 1) throw input_error("decode input must be single-sorted");
  if (X.point_count(0) == 0) throw input_error("decode input has no points");
}

}  // namespace detail

// Multiplier that brings the stored distances back to the diameter-6 units
// the decoding formulas are written in. Every encoded space has the tag at
// distance 4 or more from everything, so after the unit rescale nothing
// exceeds 1; a distance above 1 therefore marks the space as unscaled.
inline Rational decode_scale_multiplier(const FinitePresentation& X) {
  detail::require_plain_metric_space(X);
  const SymMatrix& m = X.metric[0];
  for (size_t i = 0; i < m.size(); ++i)
    for (size_t j = i + 1; j < m.size(); ++j)
      if (m.at(i, j) > 1) return Rational(1);
  return Rational(6);
}

inline Rational decode_scale_multiplier(const FinitePresentation& X, const Json& metadata) {
  auto it = metadata.find("scale");
  if (it == metadata.end()) return decode_scale_multiplier(X);
  if (!it->is_string()) throw input_error("metadata scale must be a rational string");
  Rational scale = parse_rational(it->get<std::string>());
  if (scale <= 0 || scale > 1) throw input_error("metadata scale must be in (0,1]");
  return 1 / scale;
}

// The tag is the only point whose distances all avoid the band [1,3]: its
// real distances start at 4, while every other point sits 1 to 3 away from
// something (the base and overflow points from each other, level points
// from the base copy). Distances are taken in raw units via `mult`.
inline size_t find_tag(const FinitePresentation& X, const Rational& mult) {
  detail::require_plain_metric_space(X);
  const SymMatrix& m = X.metric[0];
  std::optional<size_t> found;
  for (size_t c = 0; c < m.size(); ++c) {
    bool profile = true;
    for (size_t q = 0; q < m.size() && profile; ++q) {
      if (q == c) continue;
      Rational d = mult * m.at(c, q);
      if (d >= 1 && d <= 3) profile = false;
    }
    if (!profile) continue;
    if (found)
      throw validation_error("not an encoded space: points " + X.points[0][*found] + " and " +
                             X.points[0][c] + " both match the tag profile");
    found = c;
  }
  if (!found) throw validation_error("not an encoded space: no point matches the tag profile");
  return *found;
}

// Classifies one point by its raw distance to the tag. The accepted values
// are 0, 5, 4, and the ladder 4+2^-n-1; anything else fails. A positive
// tolerance (below 1/4, so the classes stay disjoint) accepts distances
// near those values instead, with levels too deep for the tolerance to
// resolve collapsing into the overflow class.
inline PointClass classify_point(const FinitePresentation& X, const Rational& mult, size_t tag,
                                 size_t p, const Rational& tolerance = Rational(0)) {
  detail::require_plain_metric_space(X);
  if (tolerance < 0 || tolerance >= rat(1, 4))
    throw input_error("classification tolerance must lie in [0, 1/4)");
  Rational d = mult * X.dist(0, tag, p);
  if (d <= tolerance) return PointClass::tag_class();
  if (rat_abs(d - 5) <= tolerance) return PointClass::base_class();
  Rational u = d - 4;
  if (rat_abs(u) <= tolerance) return PointClass::infinity_class();
  if (u > 0) {
    // Locate the nearest rung of the coupling ladder 2^-n-1.
    long n = 0;
    while (pow2(-n - 1) > u) ++n;
    Rational gap = u - pow2(-n - 1);
    if (n > 0 && pow2(-n) - u < gap) {
      --n;
      gap = pow2(-n - 1) - u;
    }
    if (gap <= tolerance) return PointClass::level_class(static_cast<size_t>(n));
  }
  throw validation_error("not an encoded space: " + X.points[0][p] + " sits at distance " +
                         format_rational(d) + " from the tag, off the expected set");
}

// The classified point partition of an encoded space.
struct Classification {
  size_t tag = 0;
  size_t infinity = 0;
  std::vector<size_t> base;                 // point indices, in storage order
  std::vector<std::vector<size_t>> levels;  // [n] -> level-n point indices
  std::vector<PointClass> by_point;
};

// Classifies every point and checks the partition shape: exactly one tag
// and one overflow point, a nonempty base copy, and level copies of the
// base copy's size for a contiguous range of levels (possibly none).
inline Classification classify_space(const FinitePresentation& X, const Rational& mult,
                                     const Rational& tolerance = Rational(0)) {
  Classification out;
  out.tag = find_tag(X, mult);
  std::optional<size_t> infinity;
  std::map<size_t, std::vector<size_t>> levels;
  for (size_t p = 0; p < X.point_count(0); ++p) {
    PointClass c = classify_point(X, mult, out.tag, p, tolerance);
    out.by_point.push_back(c);
    switch (c.label) {
      case PointClass::Label::tag:
        if (p != out.tag)
          throw validation_error("not an encoded space: " + X.points[0][p] +
                                 " sits on top of the tag");
        break;
      case PointClass::Label::infinity:
        if (infinity)
          throw validation_error("not an encoded space: two overflow points, " +
                                 X.points[0][*infinity] + " and " + X.points[0][p]);
        infinity = p;
        break;
      case PointClass::Label::base: out.base.push_back(p); break;
      case PointClass::Label::level: levels[c.level].push_back(p); break;
    }
  }
  if (!infinity) throw validation_error("not an encoded space: no overflow point");
  out.infinity = *infinity;
  if (out.base.empty()) throw validation_error("not an encoded space: no base points");
  if (!levels.empty() && levels.rbegin()->first + 1 != levels.size())
    throw validation_error("not an encoded space: level copies are not contiguous from 0");
  for (auto& [n, members] : levels) {
    if (members.size() != out.base.size())
      throw validation_error("not an encoded space: level " + std::to_string(n) + " has " +
                             std::to_string(members.size()) + " points, base copy has " +
                             std::to_string(out.base.size()));
    out.levels.push_back(std::move(members));
  }
  return out;
}

// The level-n image of a base point is the unique level-n point at raw
// distance exactly 2, the zero of the coupling case 2 + 2^-n-1 d.
inline size_t level_bijection(const FinitePresentation& X, const Rational& mult,
                              const Classification& cls, size_t n, size_t base_point,
                              const Rational& tolerance = Rational(0)) {
  if (n >= cls.levels.size()) throw input_error("level " + std::to_string(n) + " is not present");
  if (cls.by_point.at(base_point) != PointClass::base_class())
    throw input_error("the level bijection starts from a base point");
  std::optional<size_t> found;
  for (size_t q : cls.levels[n]) {
    if (rat_abs(mult * X.dist(0, base_point, q) - 2) > tolerance) continue;
    if (found)
      throw validation_error("malformed encoded space: " + X.points[0][*found] + " and " +
                             X.points[0][q] + " both sit at distance 2 from " +
                             X.points[0][base_point]);
    found = q;
  }
  if (!found)
    throw validation_error("malformed encoded space: no level-" + std::to_string(n) +
                           " point at distance 2 from " + X.points[0][base_point]);
  return *found;
}

// Inverts the coupling case d(f_n(x), f_{n+1}(y)) = 2^-n-1 (1 + P_n(x,y)):
// the predicate value is 2^{n+1} d minus 1, truncated at 0. Values beyond 1
// (past the tolerance, which the 2^{n+1} factor amplifies) cannot come from
// a valid coupling and are rejected.
inline Rational recover_predicate(const FinitePresentation& X, const Rational& mult,
                                  const Classification& cls, size_t n, size_t x, size_t y,
                                  const Rational& tolerance = Rational(0)) {
  size_t fx = level_bijection(X, mult, cls, n, x, tolerance);
  size_t fy = level_bijection(X, mult, cls, n + 1, y, tolerance);
  Rational value = trunc_sub(pow2(static_cast<long>(n) + 1) * mult * X.dist(0, fx, fy),
                             Rational(1));
  if (value > 1 + pow2(static_cast<long>(n) + 1) * tolerance)
    throw validation_error("malformed encoded space: recovered value " + format_rational(value) +
                           " of predicate " + std::to_string(n) + " at (" + X.points[0][x] +
                           "," + X.points[0][y] + ") exceeds 1");
  return rat_min(value, Rational(1));
}

struct SetDistance {
  Rational value;          // infimum of d(p,y) + c |d(y,tag) - r| over all y
  size_t witness = 0;      // a y attaining it
  Rational true_distance;  // plain minimum of d(p,y) over the target class
};

// Distance-predicate formula for the base copy or a level copy: the class
// is the zeroset of |d(y,tag) - r| with r = 5 or 4+2^-n-1, and the
// c-weighted combination bounds the true set distance from above. With
// c = 5 the two agree everywhere; the true distance is returned alongside
// so smaller coefficients stay observable.
inline SetDistance eval_set_distance(const FinitePresentation& X, const Rational& mult,
                                     const Classification& cls, const PointClass& target,
                                     size_t p, const Rational& c) {
  const std::vector<size_t>* members = nullptr;
  Rational r;
  if (target == PointClass::base_class()) {
    members = &cls.base;
    r = 5;
  } else if (target.label == PointClass::Label::level) {
    if (target.level >= cls.levels.size())
      throw input_error("level " + std::to_string(target.level) + " is not present");
    members = &cls.levels[target.level];
    r = 4 + pow2(-static_cast<long>(target.level) - 1);
  } else {
    throw input_error("set distances target the base copy or a level copy");
  }

  SetDistance out;
  for (size_t y = 0; y < X.point_count(0); ++y) {
    Rational v =
        mult * X.dist(0, p, y) + c * rat_abs(mult * X.dist(0, y, cls.tag) - r);
    if (y == 0 || v < out.value) {
      out.value = v;
      out.witness = y;
    }
  }
  out.true_distance = mult * X.dist(0, p, members->front());
  for (size_t y : *members) out.true_distance = rat_min(out.true_distance, mult * X.dist(0, p, y));
  return out;
}

// Rebuilds the normalized structure the encoder consumed: base point names
// and distances straight from the base copy, one binary predicate per
// enumerated name via the coupling inversion, identity moduli. The metadata
// block supplies the scale, the expected level count, and the predicate
// names; without it the enumeration is read off the level population (which
// cannot see trailing all-zero predicates) and named P0, P1, ...
inline FinitePresentation recover_structure(const FinitePresentation& X, const Json& metadata) {
  detail::require_plain_metric_space(X);
  Rational mult = decode_scale_multiplier(X, metadata);
  Classification cls = classify_space(X, mult);

  if (auto it = metadata.find("level_cap"); it != metadata.end()) {
    if (!it->is_number_integer() || *it < 0)
      throw input_error("metadata level_cap must be a count");
    if (it->get<size_t>() != cls.levels.size())
      throw validation_error("malformed encoded space: metadata expects " +
                             std::to_string(it->get<size_t>()) + " level copies, found " +
                             std::to_string(cls.levels.size()));
  }

  std::vector<std::string> enumeration;
  if (auto it = metadata.find("enumeration"); it != metadata.end()) {
    if (!it->is_array()) throw input_error("metadata enumeration must be a name list");
    for (const auto& name : *it) {
      if (!name.is_string()) throw input_error("metadata enumeration must be a name list");
      enumeration.push_back(name.get<std::string>());
    }
  } else {
    for (size_t n = 0; n + 1 < cls.levels.size(); ++n)
      enumeration.push_back("P" + std::to_string(n));
  }
  if (cls.levels.size() < enumeration.size() + 1)
    throw validation_error("insufficient levels: recovering " +
                           std::to_string(enumeration.size()) + " predicates needs " +
                           std::to_string(enumeration.size() + 1) + " level copies, found " +
                           std::to_string(cls.levels.size()));
  if (enumeration.empty())
    throw validation_error("insufficient levels: no predicate is recoverable");

  size_t count = cls.base.size();
  FinitePresentation out;
  out.signature.sorts = {X.signature.sorts[0]};
  out.signature.home_sort = 0;
  for (const auto& name : enumeration)
    out.signature.predicates.push_back({name, {0, 0}, PLFunction::identity()});
  out.points.resize(1);
  for (size_t b : cls.base) out.points[0].push_back(X.points[0][b]);

  SymMatrix m(count);
  for (size_t i = 0; i < count; ++i)
    for (size_t j = i + 1; j < count; ++j)
      m.set(i, j, mult * X.dist(0, cls.base[i], cls.base[j]));
  out.metric = {m};

  // Level maps f_0 .. f_E, each checked to be a bijection onto its level.
  std::vector<std::vector<size_t>> maps(enumeration.size() + 1);
  for (size_t n = 0; n < maps.size(); ++n) {
    std::vector<bool> hit(count, false);
    for (size_t b = 0; b < count; ++b) {
      size_t image = level_bijection(X, mult, cls, n, cls.base[b]);
      size_t slot = 0;
      while (cls.levels[n][slot] != image) ++slot;
      if (hit[slot])
        throw validation_error("malformed encoded space: level " + std::to_string(n) +
                               " image " + X.points[0][image] + " is shared by two base points");
      hit[slot] = true;
      maps[n].push_back(image);
    }
  }

  for (size_t t = 0; t < enumeration.size(); ++t) {
    PredTable table({count, count});
    for (size_t i = 0; i < count; ++i)
      for (size_t j = 0; j < count; ++j) {
        Rational value =
            trunc_sub(pow2(static_cast<long>(t) + 1) * mult * X.dist(0, maps[t][i], maps[t + 1][j]),
                      Rational(1));
        if (value > 1)
          throw validation_error("malformed encoded space: recovered value " +
                                 format_rational(value) + " of " + enumeration[t] + " exceeds 1");
        table.set({i, j}, value);
      }
    out.tables.push_back(std::move(table));
  }

  // The base copy carries the metric directly and the first predicate
  // carries half of it through the couplings; they must agree.
  for (size_t i = 0; i < count; ++i)
    for (size_t j = 0; j < count; ++j)
      if (2 * out.tables[0].at({i, j}) != m.at(i, j))
        throw validation_error("malformed encoded space: base distance of (" + out.points[0][i] +
                               "," + out.points[0][j] +
                               ") disagrees with the recovered half-metric");

  return out;
}

inline FinitePresentation recover_structure(const FinitePresentation& X) {
  return recover_structure(X, Json::object());
}

// Decodes the serialized form: a presentation plus an optional metadata
// block, as written by the encoder.
inline FinitePresentation decode(const Json& encoded) {
  FinitePresentation X = presentation_from_json(encoded);
  if (auto it = encoded.find("metadata"); it != encoded.end()) return recover_structure(X, *it);
  return recover_structure(X);
}

}  // namespace mscodec
