#pragma once

#include "pl_function.hpp"
#include "presentation.hpp"

#include <stdexcept>
#include <vector>

namespace mscodec {

namespace detail {

// Upper boundary of the convex hull of points sorted by strictly increasing
// x, as a function: the least concave function through or above all of them.
// Monotone chain; a middle point is dropped exactly when it lies on or below
// the segment joining its neighbors, decided by exact cross products.
inline std::vector<PLFunction::Point> upper_hull(const std::vector<PLFunction::Point>& pts) {
  std::vector<PLFunction::Point> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      if ((b.y - a.y) * (p.x - a.x) <= (p.y - a.y) * (b.x - a.x))
        hull.pop_back();
      else
        break;
    }
    hull.push_back(p);
  }
  return hull;
}

}  // namespace detail

// Running maximum x -> max{f(t) : t <= x}, the least nondecreasing function
// above f. Follows f while f sets new highs and stays flat across dips.
inline PLFunction monotone_envelope(const PLFunction& f) {
  const auto& pts = f.points();
  std::vector<PLFunction::Point> out;
  out.push_back(pts.front());
  Rational peak = pts.front().y;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto& p = pts[i];
    const auto& q = pts[i + 1];
    if (q.y <= peak) {
      out.push_back({q.x, peak});
      continue;
    }
    if (p.y < peak) {
      // The segment re-crosses the old peak partway in; flat until there.
      Rational cross_x = p.x + (peak - p.y) / (q.y - p.y) * (q.x - p.x);
      out.push_back({cross_x, peak});
    }
    out.push_back(q);
    peak = q.y;
  }
  return PLFunction(std::move(out));
}

struct MajorantResult {
  PLFunction alpha;
  int grid_level = 0;
  // The least nondecreasing concave majorant of the input lies between
  // alpha and alpha + certified_gap everywhere.
  Rational certified_gap;
};

// Least nondecreasing concave majorant, computed from samples on the dyadic
// grid with step 2^-grid_level. The result is a lower approximation; the
// certified gap 2 * min{L * 2^-grid_level, 1} with L the largest absolute
// slope bounds how far above it the true majorant can be.
inline MajorantResult concave_majorant(const PLFunction& delta, int grid_level) {
  if (grid_level < 0 || grid_level > 24) throw std::invalid_argument("grid level out of range");
  PLFunction env = monotone_envelope(delta);
  size_t cells = size_t(1) << grid_level;
  std::vector<PLFunction::Point> samples;
  samples.reserve(cells + 1);
  for (size_t i = 0; i <= cells; ++i) {
    Rational x = Rational(Integer(i), Integer(cells));
    samples.push_back({x, env(x)});
  }
  MajorantResult r;
  r.alpha = PLFunction(detail::upper_hull(samples));
  r.grid_level = grid_level;
  Rational step_jump = rat_min(delta.max_abs_slope() * pow2(-grid_level), Rational(1));
  r.certified_gap = 2 * step_jump;
  return r;
}

// For piecewise linear input the majorant is itself piecewise linear with
// breakpoints among the envelope's own, so sampling there is exact and the
// gap is zero.
inline PLFunction concave_hull_exact(const PLFunction& delta) {
  PLFunction env = monotone_envelope(delta);
  return PLFunction(detail::upper_hull(env.points()));
}

// Largest coordinatewise distance between two tuples with the given sorts.
inline Rational tuple_max_distance(const FinitePresentation& s, const std::vector<size_t>& arity,
                                   const std::vector<size_t>& a, const std::vector<size_t>& b) {
  Rational best(0);
  for (size_t k = 0; k < arity.size(); ++k) best = rat_max(best, s.dist(arity[k], a[k], b[k]));
  return best;
}

// Regularization f_n(x) = min_y min{(1/n) f(y) + d(x,y), 1} over tuples with
// the coordinatewise maximum distance. The result is 1-Lipschitz and
// n * f_n <= f, with n * f_n nondecreasing in n.
inline PredTable lipschitz_approx(const FinitePresentation& s, const std::vector<size_t>& arity,
                                  const PredTable& f, long n) {
  if (n < 1) throw std::invalid_argument("regularization index must be positive");
  std::vector<size_t> shape;
  for (size_t sort : arity) shape.push_back(s.point_count(sort));
  if (f.shape() != shape) throw input_error("table shape does not match the arity");

  std::vector<std::vector<size_t>> tuples;
  for_each_tuple(shape, [&](const std::vector<size_t>& t) { tuples.push_back(t); });

  PredTable out(shape);
  for (const auto& x : tuples) {
    Rational best(1);
    for (const auto& y : tuples) {
      Rational cand = f.at(y) / n + tuple_max_distance(s, arity, x, y);
      best = rat_min(best, cand);
    }
    out.set(x, best);
  }
  return out;
}

}  // namespace mscodec
