#include <mscodec/interval.hpp>
#include <mscodec/pl_function.hpp>
#include <mscodec/rational.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace mscodec;
using testsup::Rng;

TEST_CASE("rational parsing and canonical formatting") {
  CHECK(parse_rational("2/4") == Rational(1, 2));
  CHECK(parse_rational("-6/4") == Rational(-3, 2));
  CHECK(parse_rational("7") == Rational(7));
  CHECK(format_rational(Rational(1, 2)) == "1/2");
  CHECK(format_rational(Rational(-3, 2)) == "-3/2");
  CHECK(format_rational(Rational(5)) == "5");
  CHECK(format_rational(Rational(0)) == "0");
  CHECK(format_rational(parse_rational("100/200")) == "1/2");

  CHECK_THROWS_AS(parse_rational("1/0"), input_error);
  CHECK_THROWS_AS(parse_rational("a/2"), input_error);
  CHECK_THROWS_AS(parse_rational("1/ 2"), input_error);
  CHECK_THROWS_AS(parse_rational(""), input_error);
  CHECK_THROWS_AS(parse_rational("1/-2"), input_error);
}

TEST_CASE("canonical form invariants hold after arithmetic") {
  Rng rng(101);
  for (int i = 0; i < 200; ++i) {
    Rational a = testsup::random_unit_rational(rng);
    Rational b = testsup::random_unit_rational(rng);
    Rational c = a + b * a - b / Rational(3);
    CHECK(gcd(numerator(c), denominator(c)) == 1);
    CHECK(denominator(c) > 0);
  }
}

TEST_CASE("dyadic rounding stays within half a step") {
  Rng rng(102);
  for (int i = 0; i < 300; ++i) {
    Rational v = testsup::random_unit_rational(rng, 997);
    unsigned k = static_cast<unsigned>(rng.uniform(0, 30));
    Rational r = round_to_dyadic(v, k);
    CHECK(is_dyadic(r));
    CHECK(rat_abs(r - v) <= pow2(-static_cast<long>(k + 1)));
  }
  CHECK(round_to_dyadic(Rational(1, 3), 2) == Rational(1, 4));
  CHECK(round_to_dyadic(Rational(-1, 3), 2) == Rational(-1, 4));
  CHECK(is_dyadic(Rational(3, 8)));
  CHECK_FALSE(is_dyadic(Rational(1, 3)));
}

TEST_CASE("pow2 and scale-ladder lookup") {
  CHECK(pow2(0) == 1);
  CHECK(pow2(5) == 32);
  CHECK(pow2(-3) == Rational(1, 8));
  CHECK(floor_log2_inv(Rational(1)) == 0);
  CHECK(floor_log2_inv(Rational(1, 2)) == 1);
  CHECK(floor_log2_inv(Rational(3, 8)) == 1);   // 1/2 >= 3/8 > 1/4
  CHECK(floor_log2_inv(Rational(1, 5)) == 2);   // 1/4 >= 1/5 > 1/8
  CHECK(trunc_sub(Rational(1, 2), Rational(1, 3)) == Rational(1, 6));
  CHECK(trunc_sub(Rational(1, 3), Rational(1, 2)) == 0);
}

TEST_CASE("PL evaluation matches the interpolation oracle") {
  // Fixed anchor: breakpoints {(0,0),(1/2,1),(1,1)} at x = 1/4 give 1/2.
  PLFunction ramp({{Rational(0), Rational(0)}, {Rational(1, 2), Rational(1)}, {Rational(1), Rational(1)}});
  CHECK(ramp(Rational(1, 4)) == Rational(1, 2));
  CHECK(ramp(Rational(0)) == 0);
  CHECK(ramp(Rational(1)) == 1);
  CHECK(ramp(Rational(3, 4)) == 1);

  Rng rng(103);
  for (int i = 0; i < 50; ++i) {
    PLFunction f = testsup::random_pl(rng);
    for (int j = 0; j < 20; ++j) {
      Rational x = testsup::random_unit_rational(rng, 997);
      CHECK(f(x) == testsup::eval_oracle(f, x));
    }
    // Breakpoints themselves evaluate exactly.
    for (const auto& p : f.points()) CHECK(f(p.x) == p.y);
  }
}

TEST_CASE("PL canonical form: endpoints, monotone x, no collinear interior") {
  // Collinear interior breakpoints are dropped on construction.
  PLFunction f({{Rational(0), Rational(0)},
                {Rational(1, 4), Rational(1, 4)},
                {Rational(1, 2), Rational(1, 2)},
                {Rational(1), Rational(1)}});
  CHECK(f == PLFunction::identity());
  CHECK(f.points().size() == 2);

  CHECK_THROWS_AS(PLFunction({{Rational(0), Rational(0)}, {Rational(1, 2), Rational(1)}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(PLFunction({{Rational(1, 4), Rational(0)}, {Rational(1), Rational(1)}}),
                  std::invalid_argument);
  std::vector<PLFunction::Point> unsorted{{Rational(0), Rational(0)},
                                          {Rational(1, 2), Rational(1)},
                                          {Rational(1, 2), Rational(0)},
                                          {Rational(1), Rational(1)}};
  CHECK_THROWS_AS(PLFunction(unsorted), std::invalid_argument);
}

TEST_CASE("pl_min inserts the crossing: min(id, 1/2)") {
  PLFunction m = pl_min(PLFunction::identity(), PLFunction::constant(Rational(1, 2)));
  std::vector<PLFunction::Point> expect{{Rational(0), Rational(0)},
                                        {Rational(1, 2), Rational(1, 2)},
                                        {Rational(1), Rational(1, 2)}};
  CHECK(m.points() == expect);
}

TEST_CASE("combinations agree pointwise with exact arithmetic") {
  Rng rng(104);
  for (int i = 0; i < 40; ++i) {
    PLFunction f = testsup::random_pl(rng);
    PLFunction g = testsup::random_pl(rng);
    Rational q = testsup::random_unit_rational(rng);
    Rational c = testsup::random_unit_rational(rng);
    PLFunction fmin = pl_min(f, g);
    PLFunction fmax = pl_max(f, g);
    PLFunction fsum = pl_sum(f, g);
    PLFunction fscale = pl_scale(q, f);
    PLFunction fcomp = pl_compose(f, g);  // g maps into [0,1] by construction
    PLFunction ftrunc = pl_trunc_sub(f, c);
    PLFunction fclamp = pl_clamp01(pl_sum(f, g));
    for (int j = 0; j < 25; ++j) {
      Rational x = testsup::random_unit_rational(rng, 211);
      Rational fx = testsup::eval_oracle(f, x);
      Rational gx = testsup::eval_oracle(g, x);
      CHECK(fmin(x) == rat_min(fx, gx));
      CHECK(fmax(x) == rat_max(fx, gx));
      CHECK(fsum(x) == fx + gx);
      CHECK(fscale(x) == q * fx);
      CHECK(fcomp(x) == testsup::eval_oracle(f, gx));
      CHECK(ftrunc(x) == trunc_sub(fx, c));
      CHECK(fclamp(x) == rat_min(rat_max(fx + gx, Rational(0)), Rational(1)));
    }
  }
}

TEST_CASE("combination outputs stay canonical") {
  Rng rng(105);
  auto check_canonical = [](const PLFunction& f) {
    const auto& pts = f.points();
    REQUIRE(pts.size() >= 2);
    CHECK(pts.front().x == 0);
    CHECK(pts.back().x == 1);
    for (size_t i = 0; i + 1 < pts.size(); ++i) CHECK(pts[i].x < pts[i + 1].x);
    for (size_t i = 1; i + 1 < pts.size(); ++i) {
      const auto &a = pts[i - 1], &b = pts[i], &c = pts[i + 1];
      CHECK((b.y - a.y) * (c.x - a.x) != (c.y - a.y) * (b.x - a.x));
    }
  };
  for (int i = 0; i < 25; ++i) {
    PLFunction f = testsup::random_pl(rng);
    PLFunction g = testsup::random_pl(rng);
    check_canonical(pl_min(f, g));
    check_canonical(pl_max(f, g));
    check_canonical(pl_sum(f, g));
    check_canonical(pl_compose(f, g));
    check_canonical(pl_clamp01(f));
  }
}

TEST_CASE("pl_combine dispatch mirrors the named operations") {
  PLFunction f = PLFunction::identity();
  PLFunction g = PLFunction::constant(Rational(1, 2));
  CHECK(pl_combine(PLCombine::min, f, g) == pl_min(f, g));
  CHECK(pl_combine(PLCombine::max, f, g) == pl_max(f, g));
  CHECK(pl_combine(PLCombine::sum, f, g) == pl_sum(f, g));
  CHECK(pl_combine(PLCombine::compose, f, g) == pl_compose(f, g));
  CHECK(pl_combine(PLCombine::scale, f, Rational(3)) == pl_scale(Rational(3), f));
  CHECK(pl_combine(PLCombine::trunc_sub_const, f, Rational(1, 4)) == pl_trunc_sub(f, Rational(1, 4)));
  CHECK(pl_combine(PLCombine::clamp, pl_scale(Rational(2), f)) == pl_clamp01(pl_scale(Rational(2), f)));
  CHECK_THROWS_AS(pl_combine(PLCombine::scale, f, g), std::invalid_argument);
  CHECK_THROWS_AS(pl_combine(PLCombine::min, f, Rational(1)), std::invalid_argument);
}

TEST_CASE("scaling beyond the unit range is exact, clamp restores it") {
  PLFunction doubled = pl_scale(Rational(2), PLFunction::identity());
  CHECK(doubled(Rational(1)) == 2);
  CHECK_FALSE(doubled.in_unit_range());
  PLFunction clamped = pl_clamp01(doubled);
  CHECK(clamped.in_unit_range());
  CHECK(clamped == PLFunction::lipschitz_modulus(Rational(2)));
}

TEST_CASE("tail_sum partial sums and tail bounds") {
  std::vector<PLFunction> two_ids{PLFunction::identity(), PLFunction::identity()};
  auto [partial, bound] = tail_sum(two_ids, 2);
  CHECK(partial == pl_scale(Rational(3, 4), PLFunction::identity()));
  CHECK(bound == Rational(1, 4));

  std::vector<PLFunction> one{PLFunction::constant(Rational(1))};
  auto [p1, b1] = tail_sum(one, 1);
  CHECK(p1 == PLFunction::constant(Rational(1, 2)));
  CHECK(b1 == Rational(1, 2));

  auto [p0, b0] = tail_sum({}, 0);
  CHECK(p0 == PLFunction::zero());
  CHECK(b0 == Rational(1));

  CHECK_THROWS_AS(tail_sum(one, 2), std::invalid_argument);

  // Any [0,1]-valued continuation of the series lands inside the bound.
  Rng rng(106);
  std::vector<PLFunction> fs;
  for (int i = 0; i < 6; ++i) fs.push_back(testsup::random_pl(rng));
  auto [p3, b3] = tail_sum(fs, 3);
  auto [p6, b6] = tail_sum(fs, 6);
  for (int j = 0; j < 30; ++j) {
    Rational x = testsup::random_unit_rational(rng);
    CHECK(p3(x) <= p6(x));
    CHECK(p6(x) <= p3(x) + b3);
  }
  CHECK(b6 < b3);
}

TEST_CASE("interval arithmetic brackets the true value") {
  Rng rng(107);
  for (int i = 0; i < 200; ++i) {
    Rational a = testsup::random_unit_rational(rng);
    Rational b = testsup::random_unit_rational(rng);
    Rational ra = testsup::random_unit_rational(rng, 16) / 8;
    Rational rb = testsup::random_unit_rational(rng, 16) / 8;
    IntervalValue ia(a, ra), ib(b, rb);
    CHECK(iv_add(ia, ib).contains(a + b));
    CHECK(iv_min(ia, ib).contains(rat_min(a, b)));
    CHECK(iv_max(ia, ib).contains(rat_max(a, b)));
    CHECK(iv_abs(ia).contains(rat_abs(a)));
    CHECK(iv_trunc_sub(ia, ib).contains(trunc_sub(a, b)));
    Rational q = testsup::random_unit_rational(rng) - Rational(1, 2);
    CHECK(iv_scale(q, ia).contains(q * a));
    CHECK(iv_scale(q, ia).radius >= 0);
  }
}

TEST_CASE("interval construction and accessors") {
  IntervalValue v = IntervalValue::exact(Rational(1, 3));
  CHECK(v.is_exact());
  CHECK(v.lo() == Rational(1, 3));
  IntervalValue w = IntervalValue::from_bounds(Rational(0), Rational(1, 2));
  CHECK(w.center == Rational(1, 4));
  CHECK(w.radius == Rational(1, 4));
  CHECK_THROWS_AS(IntervalValue(Rational(0), Rational(-1)), std::invalid_argument);
  CHECK_THROWS_AS(IntervalValue::from_bounds(Rational(1), Rational(0)), std::invalid_argument);
}
