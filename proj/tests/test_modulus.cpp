#include <mscodec/modulus_toolkit.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace mscodec;

namespace {

// Oracle for the running maximum: the best value seen at any breakpoint to
// the left, or at x itself. Shares no code with monotone_envelope.
Rational envelope_oracle(const PLFunction& f, const Rational& x) {
  Rational best = f(x);
  for (const auto& bp : f.points())
    if (bp.x <= x) best = rat_max(best, bp.y);
  return best;
}

// Oracle for the least nondecreasing concave majorant, evaluated pointwise
// as the cheapest nondecreasing affine function above delta. The minimum of
// the linear program sits at a vertex where two constraints are active, so
// enumerating all constraint pairs and filtering for feasibility finds it.
Rational affine_majorant_oracle(const PLFunction& delta, const Rational& x_hat) {
  const auto& pts = delta.points();
  std::vector<std::pair<Rational, Rational>> candidates;  // (m, b)
  for (size_t i = 0; i < pts.size(); ++i) {
    candidates.push_back({Rational(0), pts[i].y});  // active with m >= 0
    for (size_t j = i + 1; j < pts.size(); ++j) {
      Rational m = (pts[j].y - pts[i].y) / (pts[j].x - pts[i].x);
      candidates.push_back({m, pts[i].y - m * pts[i].x});
    }
  }
  bool found = false;
  Rational best(0);
  for (const auto& [m, b] : candidates) {
    if (m < 0) continue;
    bool feasible = true;
    for (const auto& p : pts)
      if (m * p.x + b < p.y) {
        feasible = false;
        break;
      }
    if (!feasible) continue;
    Rational value = m * x_hat + b;
    if (!found || value < best) {
      best = value;
      found = true;
    }
  }
  REQUIRE(found);
  return best;
}

bool is_concave(const PLFunction& f) {
  const auto& pts = f.points();
  for (size_t i = 0; i + 2 < pts.size(); ++i) {
    const auto& a = pts[i];
    const auto& b = pts[i + 1];
    const auto& c = pts[i + 2];
    // slope(a,b) < slope(b,c) means a convex kink
    if ((b.y - a.y) * (c.x - b.x) < (c.y - b.y) * (b.x - a.x)) return false;
  }
  return true;
}

std::vector<Rational> probe_points(testsup::Rng& rng, const PLFunction& f, const PLFunction& g, int extra) {
  std::vector<Rational> xs;
  for (const auto& p : f.points()) xs.push_back(p.x);
  for (const auto& p : g.points()) xs.push_back(p.x);
  for (int i = 0; i < extra; ++i) xs.push_back(testsup::random_unit_rational(rng));
  return xs;
}

}  // namespace

TEST_CASE("monotone envelope matches the running maximum oracle") {
  PLFunction dip({{Rational(0), Rational(0)}, {rat(1, 2), Rational(1)}, {Rational(1), Rational(0)}});
  PLFunction expected({{Rational(0), Rational(0)}, {rat(1, 2), Rational(1)}, {Rational(1), Rational(1)}});
  REQUIRE(monotone_envelope(dip) == expected);

  testsup::Rng rng(411);
  for (int trial = 0; trial < 30; ++trial) {
    PLFunction f = testsup::random_pl(rng);
    PLFunction env = monotone_envelope(f);
    REQUIRE(env.is_nondecreasing());
    for (const Rational& x : probe_points(rng, f, env, 20)) {
      Rational want = envelope_oracle(f, x);
      REQUIRE(env(x) == want);
      REQUIRE(env(x) >= f(x));
    }
    // Least such function: envelopes are fixed points.
    REQUIRE(monotone_envelope(env) == env);
  }
}

TEST_CASE("exact concave hull equals the affine majorant oracle") {
  REQUIRE(concave_hull_exact(PLFunction::identity()) == PLFunction::identity());
  REQUIRE(concave_hull_exact(PLFunction::constant(rat(2, 3))) == PLFunction::constant(rat(2, 3)));
  PLFunction lip3 = PLFunction::lipschitz_modulus(Rational(3));
  REQUIRE(concave_hull_exact(lip3) == lip3);

  PLFunction dip({{Rational(0), Rational(0)}, {rat(1, 2), Rational(1)}, {Rational(1), Rational(0)}});
  PLFunction hull({{Rational(0), Rational(0)}, {rat(1, 2), Rational(1)}, {Rational(1), Rational(1)}});
  REQUIRE(concave_hull_exact(dip) == hull);

  testsup::Rng rng(412);
  for (int trial = 0; trial < 25; ++trial) {
    PLFunction delta = testsup::random_pl(rng);
    PLFunction alpha = concave_hull_exact(delta);
    REQUIRE(alpha.is_nondecreasing());
    REQUIRE(is_concave(alpha));
    for (const Rational& x : probe_points(rng, delta, alpha, 15)) {
      REQUIRE(alpha(x) >= delta(x));
      REQUIRE(alpha(x) == affine_majorant_oracle(delta, x));
    }
  }
}

TEST_CASE("sampled majorant brackets the exact hull") {
  testsup::Rng rng(413);
  for (int trial = 0; trial < 20; ++trial) {
    PLFunction delta = testsup::random_pl(rng);
    PLFunction exact = concave_hull_exact(delta);
    MajorantResult prev;
    bool have_prev = false;
    for (int level : {0, 2, 4, 6}) {
      MajorantResult r = concave_majorant(delta, level);
      REQUIRE(r.grid_level == level);
      REQUIRE(r.certified_gap >= 0);
      REQUIRE(r.alpha.is_nondecreasing());
      REQUIRE(is_concave(r.alpha));
      for (const Rational& x : probe_points(rng, delta, r.alpha, 10)) {
        REQUIRE(r.alpha(x) <= exact(x));
        REQUIRE(exact(x) <= r.alpha(x) + r.certified_gap);
        if (have_prev) {
          REQUIRE(prev.alpha(x) <= r.alpha(x));
          REQUIRE(r.alpha(x) <= prev.alpha(x) + prev.certified_gap);
        }
      }
      prev = r;
      have_prev = true;
    }
  }
  REQUIRE_THROWS_AS(concave_majorant(PLFunction::identity(), -1), std::invalid_argument);
  REQUIRE_THROWS_AS(concave_majorant(PLFunction::identity(), 25), std::invalid_argument);
}

TEST_CASE("convex increasing data hulls to the chord") {
  // Interpolate x^2 on a dyadic grid; its hull is the chord through the
  // endpoints, which is the identity.
  std::vector<PLFunction::Point> pts;
  for (int i = 0; i <= 64; ++i) {
    Rational x = rat(i, 64);
    pts.push_back({x, x * x});
  }
  PLFunction squareish(std::move(pts));
  REQUIRE(concave_hull_exact(squareish) == PLFunction::identity());
  MajorantResult r = concave_majorant(squareish, 4);
  REQUIRE(r.alpha == PLFunction::identity());
}

namespace {

FinitePresentation toolkit_fixture() {
  FinitePresentation s;
  s.signature.sorts = {"A", "B"};
  s.signature.home_sort = 0;
  s.signature.predicates.push_back({"P", {0}, PLFunction::identity()});
  s.signature.predicates.push_back({"R", {0, 1}, PLFunction::constant(Rational(1))});
  s.points = {{"a0", "a1", "a2"}, {"b0", "b1"}};
  SymMatrix mA(3);
  mA.set(0, 1, rat(1, 2));
  mA.set(0, 2, rat(1, 4));
  mA.set(1, 2, rat(1, 2));
  SymMatrix mB(2);
  mB.set(0, 1, rat(1, 3));
  s.metric = {mA, mB};
  PredTable tP({3});
  tP.set({0}, Rational(0));
  tP.set({1}, rat(1, 2));
  tP.set({2}, rat(1, 4));
  PredTable tR({3, 2});
  tR.set({0, 0}, Rational(1));
  tR.set({1, 0}, Rational(0));
  tR.set({2, 0}, rat(7, 8));
  tR.set({0, 1}, rat(1, 16));
  tR.set({1, 1}, Rational(1));
  tR.set({2, 1}, rat(3, 5));
  s.tables = {tP, tR};
  return s;
}

Rational table_gap(const PredTable& f, const PredTable& fn, long n) {
  Rational worst(0);
  for_each_tuple(f.shape(), [&](const std::vector<size_t>& t) {
    worst = rat_max(worst, f.at(t) - Rational(n) * fn.at(t));
  });
  return worst;
}

}  // namespace

TEST_CASE("lipschitz regularization obeys its contract") {
  FinitePresentation s = toolkit_fixture();

  // A function already 1-Lipschitz is its own first regularization.
  REQUIRE(lipschitz_approx(s, {0}, s.tables[0], 1) == s.tables[0]);

  const PredTable& f = s.tables[1];
  std::vector<size_t> arity = {0, 1};
  std::vector<std::vector<size_t>> tuples;
  for_each_tuple(f.shape(), [&](const std::vector<size_t>& t) { tuples.push_back(t); });

  Rational prev_gap;
  PredTable prev_fn;
  for (long n = 1; n <= 8; ++n) {
    PredTable fn = lipschitz_approx(s, arity, f, n);
    for (const auto& x : tuples) {
      REQUIRE(fn.at(x) >= 0);
      REQUIRE(fn.at(x) <= 1);
      REQUIRE(Rational(n) * fn.at(x) <= f.at(x));
      if (n > 1) REQUIRE(Rational(n) * fn.at(x) >= Rational(n - 1) * prev_fn.at(x));
      for (const auto& y : tuples)
        REQUIRE(rat_abs(fn.at(x) - fn.at(y)) <= tuple_max_distance(s, arity, x, y));
    }
    Rational gap = table_gap(f, fn, n);
    if (n > 1) REQUIRE(gap <= prev_gap);
    prev_gap = gap;
    prev_fn = fn;
  }

  // Random tables keep the same guarantees.
  testsup::Rng rng(414);
  for (int trial = 0; trial < 20; ++trial) {
    PredTable g(f.shape());
    for (const auto& t : tuples) g.set(t, testsup::random_unit_rational(rng));
    long n = 1 + long(rng.uniform(0, 5));
    PredTable gn = lipschitz_approx(s, arity, g, n);
    for (const auto& x : tuples) {
      REQUIRE(Rational(n) * gn.at(x) <= g.at(x));
      for (const auto& y : tuples)
        REQUIRE(rat_abs(gn.at(x) - gn.at(y)) <= tuple_max_distance(s, arity, x, y));
    }
  }

  REQUIRE_THROWS_AS(lipschitz_approx(s, arity, f, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(lipschitz_approx(s, {0}, f, 1), input_error);
}
