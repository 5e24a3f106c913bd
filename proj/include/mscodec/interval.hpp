#pragma once

#include "rational.hpp"

namespace mscodec {

// A value known to lie within [center - radius, center + radius]. Radius 0
// means the value is exact. Oracle-backed evaluations keep the center dyadic.
struct IntervalValue {
  Rational center;
  Rational radius;

  IntervalValue() : center(0), radius(0) {}
  IntervalValue(Rational c, Rational r) : center(std::move(c)), radius(std::move(r)) {
    if (radius < 0) throw std::invalid_argument("negative interval radius");
  }

  static IntervalValue exact(Rational v) { return IntervalValue(std::move(v), Rational(0)); }
  static IntervalValue from_bounds(const Rational& lo, const Rational& hi) {
    if (lo > hi) throw std::invalid_argument("interval bounds out of order");
    return IntervalValue((lo + hi) / 2, (hi - lo) / 2);
  }

  Rational lo() const { return center - radius; }
  Rational hi() const { return center + radius; }
  bool is_exact() const { return radius == 0; }
  bool contains(const Rational& v) const { return lo() <= v && v <= hi(); }

  friend bool operator==(const IntervalValue& a, const IntervalValue& b) {
    return a.center == b.center && a.radius == b.radius;
  }
};

inline IntervalValue iv_add(const IntervalValue& a, const IntervalValue& b) {
  return IntervalValue(a.center + b.center, a.radius + b.radius);
}

inline IntervalValue iv_scale(const Rational& q, const IntervalValue& a) {
  return IntervalValue(q * a.center, rat_abs(q) * a.radius);
}

inline IntervalValue iv_min(const IntervalValue& a, const IntervalValue& b) {
  return IntervalValue::from_bounds(rat_min(a.lo(), b.lo()), rat_min(a.hi(), b.hi()));
}

inline IntervalValue iv_max(const IntervalValue& a, const IntervalValue& b) {
  return IntervalValue::from_bounds(rat_max(a.lo(), b.lo()), rat_max(a.hi(), b.hi()));
}

inline IntervalValue iv_abs(const IntervalValue& a) {
  if (a.lo() >= 0) return a;
  if (a.hi() <= 0) return IntervalValue(-a.center, a.radius);
  return IntervalValue::from_bounds(Rational(0), rat_max(-a.lo(), a.hi()));
}

// a -. b with endpoint monotonicity: both bounds go through max{., 0}.
inline IntervalValue iv_trunc_sub(const IntervalValue& a, const IntervalValue& b) {
  return IntervalValue::from_bounds(trunc_sub(a.lo(), b.hi()), trunc_sub(a.hi(), b.lo()));
}

}  // namespace mscodec
