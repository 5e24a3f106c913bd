#pragma once

#include "rational.hpp"

#include <algorithm>
#include <initializer_list>
#include <utility>
#include <vector>

namespace mscodec {

// Piecewise linear function on [0,1] with exact rational breakpoints.
//
// Canonical form: breakpoint abscissae strictly increase, the first is 0,
// the last is 1, and no interior breakpoint is collinear with its
// neighbours. Two PLFunctions are equal iff their canonical breakpoint
// vectors are equal, which by construction is pointwise equality.
//
// Values are arbitrary rationals. Combinations such as scaling must agree
// with the exact pointwise result, so intermediate functions may leave
// [0,1]; the unit range is a property checked where a modulus or a
// predicate-valued function is required, not a representation invariant.
class PLFunction {
 public:
  struct Point {
    Rational x, y;
    friend bool operator==(const Point&, const Point&) = default;
  };

  // Default-constructed function is identically zero.
  PLFunction() : pts_{{Rational(0), Rational(0)}, {Rational(1), Rational(0)}} {}

  explicit PLFunction(std::vector<Point> pts) : pts_(std::move(pts)) { canonicalize(); }

  PLFunction(std::initializer_list<Point> pts) : pts_(pts) { canonicalize(); }

  static PLFunction zero() { return PLFunction(); }

  static PLFunction constant(const Rational& c) {
    return PLFunction({{Rational(0), c}, {Rational(1), c}});
  }

  static PLFunction identity() {
    return PLFunction({{Rational(0), Rational(0)}, {Rational(1), Rational(1)}});
  }

  // min{L*x, 1}, the canonical L-Lipschitz modulus (identity when L = 1).
  static PLFunction lipschitz_modulus(const Rational& L) {
    if (L < 0) throw std::invalid_argument("negative Lipschitz constant");
    if (L <= 1) return PLFunction({{Rational(0), Rational(0)}, {Rational(1), L}});
    return PLFunction({{Rational(0), Rational(0)}, {Rational(1) / L, Rational(1)}, {Rational(1), Rational(1)}});
  }

  const std::vector<Point>& points() const { return pts_; }

  Rational operator()(const Rational& x) const {
    if (x < 0 || x > 1) throw std::invalid_argument("PLFunction argument outside [0,1]");
    // Find the segment whose left endpoint is the last breakpoint <= x.
    size_t lo = 0, hi = pts_.size() - 1;
    while (hi - lo > 1) {
      size_t mid = (lo + hi) / 2;
      (pts_[mid].x <= x ? lo : hi) = mid;
    }
    if (x == pts_[lo].x) return pts_[lo].y;
    if (x == pts_[hi].x) return pts_[hi].y;
    const Point &a = pts_[lo], &b = pts_[hi];
    return a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x);
  }

  bool in_unit_range() const {
    for (const auto& p : pts_)
      if (p.y < 0 || p.y > 1) return false;
    return true;
  }

  Rational max_value() const {
    Rational m = pts_[0].y;
    for (const auto& p : pts_) m = rat_max(m, p.y);
    return m;
  }

  Rational min_value() const {
    Rational m = pts_[0].y;
    for (const auto& p : pts_) m = rat_min(m, p.y);
    return m;
  }

  // Largest |slope| over all segments; 0 for a constant function.
  Rational max_abs_slope() const {
    Rational m(0);
    for (size_t i = 0; i + 1 < pts_.size(); ++i) {
      Rational s = rat_abs((pts_[i + 1].y - pts_[i].y) / (pts_[i + 1].x - pts_[i].x));
      m = rat_max(m, s);
    }
    return m;
  }

  bool is_nondecreasing() const {
    for (size_t i = 0; i + 1 < pts_.size(); ++i)
      if (pts_[i + 1].y < pts_[i].y) return false;
    return true;
  }

  friend bool operator==(const PLFunction&, const PLFunction&) = default;

 private:
  void canonicalize() {
    if (pts_.size() < 2) throw std::invalid_argument("PLFunction needs at least two breakpoints");
    for (size_t i = 0; i + 1 < pts_.size(); ++i)
      if (!(pts_[i].x < pts_[i + 1].x))
        throw std::invalid_argument("PLFunction breakpoints must strictly increase");
    if (pts_.front().x != 0 || pts_.back().x != 1)
      throw std::invalid_argument("PLFunction domain must be exactly [0,1]");
    std::vector<Point> out;
    out.reserve(pts_.size());
    for (const auto& p : pts_) {
      while (out.size() >= 2) {
        const Point& a = out[out.size() - 2];
        const Point& b = out[out.size() - 1];
        if ((b.y - a.y) * (p.x - a.x) == (p.y - a.y) * (b.x - a.x))
          out.pop_back();  // b sits on the segment a--p
        else
          break;
      }
      out.push_back(p);
    }
    pts_ = std::move(out);
  }

  std::vector<Point> pts_;
};

namespace detail {

inline std::vector<Rational> merged_xs(const PLFunction& f, const PLFunction& g) {
  std::vector<Rational> xs;
  xs.reserve(f.points().size() + g.points().size());
  for (const auto& p : f.points()) xs.push_back(p.x);
  for (const auto& p : g.points()) xs.push_back(p.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

// Grid refined so that on every cell f - g has constant sign. Both min and
// max are then linear per cell and exact interpolation through the cell
// endpoints reproduces them.
inline std::vector<Rational> xs_with_crossings(const PLFunction& f, const PLFunction& g) {
  std::vector<Rational> xs = merged_xs(f, g);
  std::vector<Rational> out;
  out.reserve(xs.size() * 2);
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) {
      Rational da = f(xs[i - 1]) - g(xs[i - 1]);
      Rational db = f(xs[i]) - g(xs[i]);
      if ((da < 0 && db > 0) || (da > 0 && db < 0)) {
        // da + t*(db - da) = 0 on the cell, linear in t.
        Rational t = da / (da - db);
        out.push_back(xs[i - 1] + t * (xs[i] - xs[i - 1]));
      }
    }
    out.push_back(xs[i]);
  }
  return out;
}

template <typename F>
PLFunction build_on(const std::vector<Rational>& xs, F&& value_at) {
  std::vector<PLFunction::Point> pts;
  pts.reserve(xs.size());
  for (const auto& x : xs) pts.push_back({x, value_at(x)});
  return PLFunction(std::move(pts));
}

}  // namespace detail

inline PLFunction pl_min(const PLFunction& f, const PLFunction& g) {
  return detail::build_on(detail::xs_with_crossings(f, g),
                          [&](const Rational& x) { return rat_min(f(x), g(x)); });
}

inline PLFunction pl_max(const PLFunction& f, const PLFunction& g) {
  return detail::build_on(detail::xs_with_crossings(f, g),
                          [&](const Rational& x) { return rat_max(f(x), g(x)); });
}

inline PLFunction pl_sum(const PLFunction& f, const PLFunction& g) {
  return detail::build_on(detail::merged_xs(f, g),
                          [&](const Rational& x) { return f(x) + g(x); });
}

inline PLFunction pl_scale(const Rational& q, const PLFunction& f) {
  std::vector<PLFunction::Point> pts = f.points();
  for (auto& p : pts) p.y *= q;
  return PLFunction(std::move(pts));
}

// outer(inner(x)). Requires inner to map [0,1] into [0,1]. Breakpoints are
// the inner ones plus every preimage of an outer breakpoint, so each output
// cell composes two linear pieces.
inline PLFunction pl_compose(const PLFunction& outer, const PLFunction& inner) {
  if (!inner.in_unit_range())
    throw std::invalid_argument("pl_compose: inner function leaves [0,1]");
  const auto& in = inner.points();
  std::vector<Rational> xs;
  for (size_t i = 0; i < in.size(); ++i) {
    xs.push_back(in[i].x);
    if (i + 1 == in.size()) break;
    const Rational &va = in[i].y, &vb = in[i + 1].y;
    if (va == vb) continue;
    // outer changes slope at its breakpoint abscissae; refine wherever the
    // inner value passes through one of them.
    for (const auto& bp : outer.points()) {
      if ((va < bp.x && bp.x < vb) || (vb < bp.x && bp.x < va)) {
        Rational t = (bp.x - va) / (vb - va);
        xs.push_back(in[i].x + t * (in[i + 1].x - in[i].x));
      }
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return detail::build_on(xs, [&](const Rational& x) { return outer(inner(x)); });
}

// max{f - c, 0}
inline PLFunction pl_trunc_sub(const PLFunction& f, const Rational& c) {
  PLFunction shifted = detail::build_on(detail::merged_xs(f, f),
                                        [&](const Rational& x) { return f(x) - c; });
  return pl_max(shifted, PLFunction::zero());
}

inline PLFunction pl_clamp01(const PLFunction& f) {
  return pl_max(pl_min(f, PLFunction::constant(Rational(1))), PLFunction::zero());
}

enum class PLCombine { min, max, sum, scale, compose, trunc_sub_const, clamp };

inline PLFunction pl_combine(PLCombine kind, const PLFunction& f, const PLFunction& g) {
  switch (kind) {
    case PLCombine::min: return pl_min(f, g);
    case PLCombine::max: return pl_max(f, g);
    case PLCombine::sum: return pl_sum(f, g);
    case PLCombine::compose: return pl_compose(f, g);
    default: throw std::invalid_argument("pl_combine: kind takes a rational, not a function");
  }
}

inline PLFunction pl_combine(PLCombine kind, const PLFunction& f, const Rational& q) {
  switch (kind) {
    case PLCombine::scale: return pl_scale(q, f);
    case PLCombine::trunc_sub_const: return pl_trunc_sub(f, q);
    default: throw std::invalid_argument("pl_combine: kind takes two functions");
  }
}

inline PLFunction pl_combine(PLCombine kind, const PLFunction& f) {
  if (kind != PLCombine::clamp) throw std::invalid_argument("pl_combine: kind needs a second argument");
  return pl_clamp01(f);
}

inline Rational pl_eval(const PLFunction& f, const Rational& x) { return f(x); }

// Partial sum of the weighted series sum_i 2^-(i+1) fs[i], cut at
// tail_start. When every summand takes values in [0,1], the full series
// differs from the partial sum by at most the returned tail bound 2^-tail_start.
inline std::pair<PLFunction, Rational> tail_sum(const std::vector<PLFunction>& fs,
                                                size_t tail_start) {
  if (tail_start > fs.size())
    throw std::invalid_argument("tail_sum: tail_start exceeds the number of summands");
  PLFunction acc = PLFunction::zero();
  for (size_t i = 0; i < tail_start; ++i)
    acc = pl_sum(acc, pl_scale(pow2(-static_cast<long>(i + 1)), fs[i]));
  return {acc, pow2(-static_cast<long>(tail_start))};
}

}  // namespace mscodec
