#include <mscodec/verifier.hpp>

#include <mscodec/encoder.hpp>
#include <mscodec/transforms.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace mscodec;

namespace {

using F = Formula;
using CF = ClosedFormula;

// The running two-point example: d(a,b) = 1, P0 the half metric, P1 an
// equality-style predicate that is 1 off the diagonal.
FinitePresentation two_point() {
  FinitePresentation s;
  s.signature.sorts = {"A"};
  s.signature.home_sort = 0;
  s.signature.predicates.push_back({"P0", {0, 0}, PLFunction::identity()});
  s.signature.predicates.push_back({"P1", {0, 0}, PLFunction::identity()});
  s.points = {{"a", "b"}};
  SymMatrix m(2);
  m.set(0, 1, Rational(1));
  s.metric = {m};
  PredTable half({2, 2});
  half.set({0, 1}, rat(1, 2));
  half.set({1, 0}, rat(1, 2));
  PredTable eq({2, 2});
  eq.set({0, 1}, Rational(1));
  eq.set({1, 0}, Rational(1));
  s.tables = {half, eq};
  return s;
}

// Three points whose second predicate only depends on its first argument.
FinitePresentation three_point() {
  FinitePresentation s;
  s.signature.sorts = {"A"};
  s.signature.home_sort = 0;
  s.signature.predicates.push_back({"P0", {0, 0}, PLFunction::identity()});
  s.signature.predicates.push_back({"P1", {0, 0}, PLFunction::identity()});
  s.points = {{"x", "y", "z"}};
  SymMatrix m(3);
  m.set(0, 1, rat(1, 2));
  m.set(0, 2, Rational(1));
  m.set(1, 2, rat(1, 2));
  s.metric = {m};
  PredTable half({3, 3});
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = 0; j < 3; ++j) half.set({i, j}, s.dist(0, i, j) / 2);
  Rational u[3] = {Rational(0), rat(1, 2), Rational(1)};
  PredTable onesided({3, 3});
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = 0; j < 3; ++j) onesided.set({i, j}, u[i]);
  s.tables = {half, onesided};
  return s;
}

// Constant second predicate with a nonzero diagonal: every adjacent
// coupling sits at the top of its band, which separates the two dagger
// coefficients on the level classes.
FinitePresentation const_one() {
  FinitePresentation s;
  s.signature.sorts = {"A"};
  s.signature.home_sort = 0;
  s.signature.predicates.push_back({"P0", {0, 0}, PLFunction::identity()});
  s.signature.predicates.push_back({"P1", {0, 0}, PLFunction::identity()});
  s.points = {{"a", "b"}};
  SymMatrix m(2);
  m.set(0, 1, Rational(1));
  s.metric = {m};
  PredTable half({2, 2});
  half.set({0, 1}, rat(1, 2));
  half.set({1, 0}, rat(1, 2));
  PredTable ones({2, 2});
  for (size_t i = 0; i < 2; ++i)
    for (size_t j = 0; j < 2; ++j) ones.set({i, j}, Rational(1));
  s.tables = {half, ones};
  return s;
}

// Two points at distance 1/2, so the home diameter sits strictly inside
// the unit interval.
FinitePresentation narrow_pair() {
  FinitePresentation s;
  s.signature.sorts = {"A"};
  s.signature.home_sort = 0;
  s.signature.predicates.push_back({"P0", {0, 0}, PLFunction::identity()});
  s.points = {{"a", "b"}};
  SymMatrix m(2);
  m.set(0, 1, rat(1, 2));
  s.metric = {m};
  PredTable half({2, 2});
  half.set({0, 1}, rat(1, 4));
  half.set({1, 0}, rat(1, 4));
  s.tables = {half};
  return s;
}

// Two sorts and predicates of arity 1 and 2, for the merge stage.
FinitePresentation two_sorted() {
  FinitePresentation s;
  s.signature.sorts = {"A", "B"};
  s.signature.home_sort = 0;
  s.signature.predicates.push_back({"P", {0}, PLFunction::identity()});
  s.signature.predicates.push_back({"R", {0, 1}, PLFunction::lipschitz_modulus(Rational(2))});
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
  tR.set({0, 0}, rat(1, 2));
  tR.set({1, 0}, rat(3, 4));
  tR.set({2, 0}, rat(5, 8));
  tR.set({0, 1}, rat(1, 3));
  tR.set({1, 1}, rat(7, 12));
  tR.set({2, 1}, rat(11, 24));
  s.tables = {tP, tR};
  return s;
}

EncodedArtifact materialized(const FinitePresentation& s, size_t cap,
                             ScaleMode scale = ScaleMode::raw) {
  return materialize(encode(s, cap, scale));
}

const AxiomCheck& entry(const AxiomReport& rep, const std::string& id) {
  const AxiomCheck* c = rep.find(id);
  REQUIRE(c != nullptr);
  return *c;
}

// Weighted distance-predicate formula for a tag-distance class of an
// encoded space: inf_y d(x,y) + c |d(y,t) - r|, with the tag supplied as a
// one-point named set.
F class_predicate(const Rational& c, const Rational& r) {
  F penalty = F::inf_over(
      "t", "tagset", F::absolute(F::add(F::dist("y", "t"), F::constant(-r))));
  return F::inf("y", F::add(F::dist("x", "y"), F::scaled(c, std::move(penalty))));
}

// Tag profile written as a term: a point is penalized 5 whenever some
// other point sits at distance in [1,3] from it. On an encoded space every
// point except the tag has a partner at distance exactly 2, so the formula
// evaluates to the tag distance itself.
F tag_profile_formula() {
  F trap = F::minimum(F::truncsub(F::dist("y", "z"), F::constant(1)),
                      F::truncsub(F::constant(3), F::dist("y", "z")));
  F penalty = F::scaled(5, F::sup("z", std::move(trap)));
  return F::inf("y", F::add(F::dist("x", "y"), std::move(penalty)));
}

}  // namespace

TEST_CASE("term evaluation matches direct table reads") {
  FinitePresentation s = three_point();

  SECTION("atoms read the tables") {
    CHECK(eval_formula(s, F::dist("u", "v"), {{"u", 0}, {"v", 2}}) ==
          IntervalValue::exact(Rational(1)));
    CHECK(eval_formula(s, F::pred("P1", {"u", "v"}), {{"u", 1}, {"v", 2}}) ==
          IntervalValue::exact(s.tables[1].at({1, 2})));
    CHECK(eval_formula(s, F::pred("P0", {"u", "u"}), {{"u", 1}}) ==
          IntervalValue::exact(Rational(0)));
  }

  SECTION("connectives compose exactly") {
    // min{1, 2 d(u,v)} - 1/4 truncated, at d = 1/2: 3/4.
    F phi = F::truncsub(F::minimum(F::constant(1), F::scaled(2, F::dist("u", "v"))),
                        F::constant(rat(1, 4)));
    CHECK(eval_formula(s, phi, {{"u", 0}, {"v", 1}}) == IntervalValue::exact(rat(3, 4)));
    F gap = F::absolute(F::add(F::dist("u", "v"), F::constant(-1)));
    CHECK(eval_formula(s, gap, {{"u", 0}, {"v", 1}}) == IntervalValue::exact(rat(1, 2)));
    CHECK(eval_formula(s, F::maximum(F::dist("u", "v"), F::constant(rat(3, 4))),
                       {{"u", 0}, {"v", 1}}) == IntervalValue::exact(rat(3, 4)));
  }

  SECTION("quantifiers fold over the universe and named sets") {
    CHECK(eval_formula(s, F::sup("x", F::inf("y", F::dist("x", "y"))), {}) ==
          IntervalValue::exact(Rational(0)));

    F diameter = F::sup_over("x", "S", F::sup_over("y", "S", F::dist("x", "y")));
    PointSets sets{{"S", {0, 1, 2}}};
    Rational direct(0);
    for (size_t i = 0; i < 3; ++i)
      for (size_t j = 0; j < 3; ++j) direct = rat_max(direct, s.dist(0, i, j));
    CHECK(eval_formula(s, diameter, {}, 0, sets) == IntervalValue::exact(direct));

    PointSets pair{{"S", {0, 1}}};
    CHECK(eval_formula(s, diameter, {}, 0, pair) == IntervalValue::exact(rat(1, 2)));
  }

  SECTION("inner bindings shadow and restore") {
    F phi = F::add(F::sup("x", F::dist("x", "o")), F::dist("x", "o"));
    CHECK(eval_formula(s, phi, {{"x", 0}, {"o", 0}}) == IntervalValue::exact(Rational(1)));
  }

  SECTION("series keep their declared tail") {
    F series = F::tail_sum({F::constant(rat(1, 4)), F::dist("u", "v")}, rat(1, 8));
    IntervalValue v = eval_formula(s, series, {{"u", 0}, {"v", 1}});
    CHECK(v.lo() == rat(3, 4));
    CHECK(v.hi() == rat(7, 8));
    CHECK_FALSE(v.is_exact());
    F cut = F::tail_sum({F::constant(rat(1, 4))}, Rational(0));
    CHECK(eval_formula(s, cut, {}).is_exact());
    CHECK_THROWS_AS(F::tail_sum({}, Rational(-1)), input_error);
  }

  SECTION("malformed uses are caller bugs") {
    CHECK_THROWS_AS(eval_formula(s, F::dist("u", "w"), {{"u", 0}}), input_error);
    CHECK_THROWS_AS(eval_formula(s, F::dist("u", "u"), {{"u", 9}}), input_error);
    CHECK_THROWS_AS(eval_formula(s, F::pred("missing", {"u"}), {{"u", 0}}), input_error);
    CHECK_THROWS_AS(eval_formula(s, F::pred("P1", {"u"}), {{"u", 0}}), input_error);
    CHECK_THROWS_AS(eval_formula(s, F::sup_over("x", "missing", F::dist("x", "x")), {}),
                    input_error);
    PointSets empty_set{{"S", {}}};
    CHECK_THROWS_AS(eval_formula(s, F::sup_over("x", "S", F::dist("x", "x")), {}, 0, empty_set),
                    input_error);
    FinitePresentation multi = two_sorted();
    CHECK_THROWS_AS(eval_formula(multi, F::constant(0), {}), input_error);
  }
}

TEST_CASE("conditions decide comparisons and produce witnesses") {
  FinitePresentation s = three_point();
  using Status = CheckOutcome::Status;

  SECTION("symmetry and the triangle law hold") {
    CF sym = CF::forall(
        "u", CF::forall("v", CF::compare(CF::Kind::eq, F::dist("u", "v"), F::dist("v", "u"))));
    CHECK(check_closed(s, sym).status == Status::holds);

    CF triangle = CF::forall(
        "u", CF::forall(
                 "v", CF::forall("w", CF::compare(CF::Kind::le, F::dist("u", "w"),
                                                  F::add(F::dist("u", "v"), F::dist("v", "w"))))));
    CHECK(check_closed(s, triangle).status == Status::holds);
  }

  SECTION("failures carry the bindings that break them") {
    CF lower = CF::forall("u", CF::compare(CF::Kind::ge, F::dist("u", "a"),
                                           F::constant(rat(1, 2))));
    CheckOutcome out = check_closed(s, lower, Rational(0), {{"a", 0}});
    REQUIRE(out.status == Status::fails);
    CHECK(out.witness["u"] == "x");
  }

  SECTION("existence scans until a definite hold") {
    CF far = CF::exists("u", CF::compare(CF::Kind::eq, F::dist("u", "a"), F::constant(1)));
    CHECK(check_closed(s, far, Rational(0), {{"a", 0}}).status == Status::holds);
    CF too_far = CF::exists("u", CF::compare(CF::Kind::gt, F::dist("u", "a"), F::constant(2)));
    CheckOutcome out = check_closed(s, too_far, Rational(0), {{"a", 0}});
    CHECK(out.status == Status::fails);
  }

  SECTION("strict and negated comparisons on exact values") {
    CHECK(check_closed(s, CF::compare(CF::Kind::ne, F::dist("u", "v"), F::constant(rat(1, 2))),
                       Rational(0), {{"u", 0}, {"v", 1}})
              .status == Status::fails);
    CHECK(check_closed(s, CF::compare(CF::Kind::lt, F::dist("u", "v"), F::constant(1)),
                       Rational(0), {{"u", 0}, {"v", 1}})
              .status == Status::holds);
    CHECK(check_closed(s, CF::compare(CF::Kind::gt, F::dist("u", "v"), F::constant(rat(1, 2))),
                       Rational(0), {{"u", 0}, {"v", 1}})
              .status == Status::fails);
  }

  SECTION("series straddles come back unknown") {
    CF cmp = CF::compare(CF::Kind::le, F::tail_sum({F::constant(rat(1, 4))}, rat(1, 4)),
                         F::constant(rat(3, 8)));
    CHECK(check_closed(s, cmp).status == Status::unknown);
    CF conj = CF::all_of({CF::compare(CF::Kind::eq, F::constant(0), F::constant(0)), cmp});
    CHECK(check_closed(s, conj).status == Status::unknown);
  }

  SECTION("connectives combine child outcomes") {
    CF yes = CF::compare(CF::Kind::eq, F::constant(0), F::constant(0));
    CF no = CF::compare(CF::Kind::eq, F::constant(0), F::constant(1));
    CHECK(check_closed(s, CF::all_of({yes, yes})).status == Status::holds);
    CHECK(check_closed(s, CF::all_of({yes, no})).status == Status::fails);
    CHECK(check_closed(s, CF::any_of({no, yes})).status == Status::holds);
    CHECK(check_closed(s, CF::any_of({no, no})).status == Status::fails);
  }

  SECTION("quantifier domains and tolerances are validated") {
    PointSets sets{{"S", {1, 2}}};
    CF bounded = CF::forall_over(
        "u", "S", CF::compare(CF::Kind::ge, F::dist("u", "a"), F::constant(rat(1, 2))));
    CHECK(check_closed(s, bounded, Rational(0), {{"a", 0}}, sets).status == Status::holds);
    PointSets hollow{{"S", {}}};
    CHECK_THROWS_AS(check_closed(s, bounded, Rational(0), {{"a", 0}}, hollow), input_error);
    CHECK_THROWS_AS(check_closed(s, bounded, Rational(-1), {{"a", 0}}, sets), input_error);
  }
}

TEST_CASE("triangle scan agrees with the independent oracle") {
  SECTION("encoded spaces are metric") {
    EncodedArtifact art = materialized(three_point(), 4);
    const SymMatrix& m = art.space.metric[0];
    std::vector<std::array<size_t, 3>> found = check_triangle(m);
    CHECK(found.empty());
    CHECK(found == testsup::violating_triples(m));
  }

  SECTION("a broken table reports both orientations") {
    SymMatrix m(3);
    m.set(0, 1, rat(1, 4));
    m.set(1, 2, rat(1, 4));
    m.set(0, 2, Rational(1));
    std::vector<std::array<size_t, 3>> found = check_triangle(m);
    std::vector<std::array<size_t, 3>> expected{{0, 1, 2}, {2, 1, 0}};
    CHECK(found == expected);
    CHECK(found == testsup::violating_triples(m));
  }

  SECTION("degenerate tables") {
    CHECK(check_triangle(SymMatrix(1)).empty());
    SymMatrix pair(2);
    pair.set(0, 1, Rational(1));
    CHECK(check_triangle(pair).empty());
    SymMatrix bad(2);
    bad.set(0, 0, Rational(1));
    CHECK_THROWS_AS(check_triangle(bad), input_error);
  }
}

TEST_CASE("distance and singleton predicates") {
  FinitePresentation s = three_point();

  SECTION("distance to a named set is recognized") {
    F phi = F::inf_over("y", "target", F::dist("x", "y"));
    PointSets sets{{"target", {0}}};
    SetPredicateCheck r = is_distance_predicate(s, phi, "x", sets);
    CHECK(r.yes);
    CHECK(r.zeroset == std::vector<size_t>{0});
    REQUIRE(is_singleton_predicate(s, phi, "x", sets));
    CHECK(*is_singleton_predicate(s, phi, "x", sets) == 0);

    PointSets both{{"target", {0, 1}}};
    SetPredicateCheck r2 = is_distance_predicate(s, phi, "x", both);
    CHECK(r2.yes);
    CHECK(r2.zeroset == std::vector<size_t>{0, 1});
    CHECK_FALSE(is_singleton_predicate(s, phi, "x", both));
  }

  SECTION("rejections carry a reason") {
    SetPredicateCheck never = is_distance_predicate(s, F::constant(rat(1, 2)), "x");
    CHECK_FALSE(never.yes);
    CHECK(never.witness["reason"] == "empty zeroset");

    F squeezed = F::scaled(rat(1, 2), F::inf_over("y", "target", F::dist("x", "y")));
    PointSets sets{{"target", {0}}};
    SetPredicateCheck off = is_distance_predicate(s, squeezed, "x", sets);
    CHECK_FALSE(off.yes);
    CHECK(off.witness.contains("point"));

    F fuzzy = F::tail_sum({F::dist("x", "x")}, rat(1, 8));
    CHECK_THROWS_AS(is_distance_predicate(s, fuzzy, "x"), input_error);
  }

  SECTION("the weighted class formula matches the decoder route") {
    EncodedArtifact art = materialized(three_point(), 4);
    const FinitePresentation& X = art.space;
    Classification cls = classify_space(X, Rational(1));
    PointSets sets{{"tagset", {cls.tag}}};

    F base_phi = class_predicate(Rational(5), Rational(5));
    SetPredicateCheck r = is_distance_predicate(X, base_phi, "x", sets);
    CHECK(r.yes);
    CHECK(r.zeroset == cls.base);
    for (size_t p = 0; p < X.point_count(0); ++p) {
      IntervalValue v = eval_formula(X, base_phi, {{"x", p}}, 0, sets);
      SetDistance oracle = eval_set_distance(X, Rational(1), cls, PointClass::base_class(), p,
                                             Rational(5));
      CHECK(v == IntervalValue::exact(oracle.value));
      CHECK(oracle.value == oracle.true_distance);
    }

    F level_phi = class_predicate(Rational(5), 4 + rat(1, 4));
    SetPredicateCheck rl = is_distance_predicate(X, level_phi, "x", sets);
    CHECK(rl.yes);
    CHECK(rl.zeroset == cls.levels[1]);

    // The printed coefficient 2 underestimates from a level-0 point, so the
    // formula stops being a distance predicate.
    F printed = class_predicate(Rational(2), Rational(5));
    SetPredicateCheck rp = is_distance_predicate(X, printed, "x", sets);
    CHECK_FALSE(rp.yes);
    size_t f0 = cls.levels[0][0];
    IntervalValue under = eval_formula(X, printed, {{"x", f0}}, 0, sets);
    SetDistance truth = eval_set_distance(X, Rational(1), cls, PointClass::base_class(), f0,
                                          Rational(2));
    CHECK(under == IntervalValue::exact(truth.value));
    CHECK(truth.value < truth.true_distance);
  }

  SECTION("the tag profile is a singleton predicate") {
    EncodedArtifact art = materialized(three_point(), 3);
    const FinitePresentation& X = art.space;
    std::optional<size_t> found = is_singleton_predicate(X, tag_profile_formula(), "x");
    REQUIRE(found);
    CHECK(*found == find_tag(X, Rational(1)));
  }
}

TEST_CASE("encoded spaces satisfy the level suite") {
  SECTION("clean encodes pass at both caps") {
    std::vector<FinitePresentation> sources = {two_point(), three_point()};
    for (size_t f = 0; f < sources.size(); ++f)
      for (size_t cap : {3, 6}) {
        CAPTURE(f, cap);
        EncodedArtifact art = materialized(sources[f], cap);
        AxiomReport rep = check_theory_tl(art.space, art.metadata);
        CHECK(rep.suite == "TL");
        CHECK(rep.ok());
        for (const AxiomCheck& c : rep.checks) {
          CAPTURE(c.id, c.note);
          if (!c.advisory) CHECK(c.status != "fail");
        }
        CHECK(entry(rep, "tag_exists").witness["x"] == "tag");
        CHECK(entry(rep, "overflow_distances").status == "pass");
        CHECK(entry(rep, "half_metric_coupling").status == "pass");
        CHECK(entry(rep, "unary_dependence").status == "skipped");

        // The printed variants disagree with the working forms on every
        // encode with a level copy and two base points.
        CHECK(entry(rep, "base_set_distance_predicate_printed").status == "fail");
        CHECK(entry(rep, "base_set_distance_predicate_printed").advisory);
        CHECK(entry(rep, "isometry_scaling_printed").status == "fail");
        // Base points sit half a unit off the level-0 rung, so the printed
        // coefficient underestimates the level classes too.
        CHECK(entry(rep, "level_set_distance_predicate_printed").status == "fail");
      }
  }

  SECTION("a constant predicate with a nonzero diagonal is legal") {
    EncodedArtifact art = materialized(const_one(), 3);
    AxiomReport rep = check_theory_tl(art.space, art.metadata);
    CHECK(rep.ok());
    CHECK(entry(rep, "level_set_distance_predicate").status == "pass");
    CHECK(entry(rep, "coupling_bounds").status == "pass");
  }

  SECTION("scales are honored and inferable") {
    EncodedArtifact unit = materialized(two_point(), 3, ScaleMode::unit);
    CHECK(check_theory_tl(unit.space, unit.metadata).ok());
    CHECK(check_theory_tl(unit.space).ok());
    EncodedArtifact raw = materialized(two_point(), 3);
    CHECK(check_theory_tl(raw.space).ok());
  }

  SECTION("home diameter is exact and thresholded") {
    EncodedArtifact art = materialized(two_point(), 3);
    AxiomReport rep = check_theory_tl(art.space, art.metadata);
    CHECK(entry(rep, "home_diameter").value == "1");

    EncodedArtifact narrow = materialized(narrow_pair(), 3);
    AxiomReport bare = check_theory_tl(narrow.space, narrow.metadata);
    CHECK(entry(bare, "home_diameter").value == "1/2");

    TheoryOptions below;
    below.r = rat(1, 2);
    CHECK(check_theory_tl(narrow.space, narrow.metadata, below).ok());
    TheoryOptions above;
    above.r = rat(3, 4);
    AxiomReport failed = check_theory_tl(narrow.space, narrow.metadata, above);
    CHECK_FALSE(failed.ok());
    CHECK(entry(failed, "home_diameter").status == "fail");

    TheoryOptions zero;
    zero.r = Rational(0);
    CHECK_THROWS_AS(check_theory_tl(narrow.space, narrow.metadata, zero), input_error);
    TheoryOptions wide;
    wide.r = Rational(2);
    CHECK_THROWS_AS(check_theory_tl(narrow.space, narrow.metadata, wide), input_error);
  }

  SECTION("unary dependence needs the enumeration hint") {
    TheoryOptions opt;
    opt.unary_predicates = std::vector<size_t>{1};

    EncodedArtifact onesided = materialized(three_point(), 3);
    AxiomReport good = check_theory_tl(onesided.space, onesided.metadata, opt);
    CHECK(good.ok());
    CHECK(entry(good, "unary_dependence").status == "pass");

    EncodedArtifact eq = materialized(two_point(), 3);
    AxiomReport bad = check_theory_tl(eq.space, eq.metadata, opt);
    CHECK_FALSE(bad.ok());
    CHECK(entry(bad, "unary_dependence").status == "fail");
  }

  SECTION("metadata promising more levels than materialized fails attainment") {
    EncodedArtifact art = materialized(two_point(), 3);
    art.metadata["level_cap"] = 5;
    AxiomReport rep = check_theory_tl(art.space, art.metadata);
    CHECK_FALSE(rep.ok());
    const AxiomCheck& c = entry(rep, "tag_distance_attained");
    CHECK(c.status == "fail");
    CHECK(c.witness["missing"].size() == 2);
  }

  SECTION("malformed metadata is a caller bug") {
    EncodedArtifact art = materialized(two_point(), 3);
    art.metadata["level_cap"] = "3";
    CHECK_THROWS_AS(check_theory_tl(art.space, art.metadata), input_error);
    art.metadata["level_cap"] = -1;
    CHECK_THROWS_AS(check_theory_tl(art.space, art.metadata), input_error);
  }

  SECTION("spaces with no tag skip the dependent checks") {
    FinitePresentation flat;
    flat.signature.sorts = {"A"};
    flat.signature.home_sort = 0;
    flat.points = {{"a", "b"}};
    SymMatrix m(2);
    m.set(0, 1, Rational(2));
    flat.metric = {m};
    AxiomReport rep = check_theory_tl(flat);
    CHECK_FALSE(rep.ok());
    CHECK(entry(rep, "tag_exists").status == "fail");
    CHECK(entry(rep, "home_diameter").status == "skipped");
  }
}

TEST_CASE("single entry tampers trip the matching axiom") {
  EncodedArtifact art = materialized(three_point(), 6);
  const Rational delta = rat(1, 64);

  auto bumped = [&](const std::string& a, const std::string& b, const Rational& dv) {
    FinitePresentation X = art.space;
    size_t i = X.point_index(0, a);
    size_t j = X.point_index(0, b);
    X.metric[0].set(i, j, X.dist(0, i, j) + dv);
    return X;
  };
  auto pinned = [&](const std::string& a, const std::string& b, const Rational& v) {
    FinitePresentation X = art.space;
    X.metric[0].set(X.point_index(0, a), X.point_index(0, b), v);
    return X;
  };
  auto expect_fail = [&](const FinitePresentation& X, const std::string& id) {
    AxiomReport rep = check_theory_tl(X, art.metadata);
    CAPTURE(id);
    CHECK_FALSE(rep.ok());
    const AxiomCheck& c = entry(rep, id);
    CHECK(c.status == "fail");
    CHECK_FALSE(c.advisory);
  };

  expect_fail(bumped("x", "y", delta), "isometry_scaling");
  expect_fail(bumped("x", "y@2", delta), "base_level_distance");
  expect_fail(bumped("x", "x@2", delta), "level_bijection");
  expect_fail(bumped("x@1", "y@1", delta), "isometry_scaling");
  expect_fail(bumped("x@0", "y@2", delta), "cross_level_distance");
  expect_fail(bumped("x@0", "x@1", -delta), "coupling_bounds");
  expect_fail(bumped("y@0", "x@1", delta), "half_metric_coupling");
  expect_fail(bumped("x", "inf", delta), "overflow_distances");
  expect_fail(bumped("x@2", "inf", delta), "overflow_distances");
  expect_fail(pinned("tag", "x", 5 + delta), "tag_distance_zeroset");
  expect_fail(pinned("tag", "x@4", 4 + pow2(-6)), "level_bijection");
  expect_fail(pinned("tag", "inf", 4 + pow2(-6)), "cross_level_distance");
}

TEST_CASE("merged spaces satisfy the sort suite") {
  FinitePresentation src = two_sorted();
  PipelineResult pr = normalize_pipeline(src, 2);
  REQUIRE(pr.trace.size() == 2);
  REQUIRE(pr.trace[1].stage == "merge");
  REQUIRE_FALSE(pr.trace[1].skipped);
  const Json& payload = pr.trace[1].payload;

  TheorySSpec spec = theory_s_spec_from_trace(payload);
  CHECK(spec.anchor_predicate == payload["q_name"].get<std::string>());
  REQUIRE(spec.level_sorts == std::vector<std::string>{"A", "B"});
  REQUIRE(spec.predicates.size() == 2);
  CHECK(spec.predicates[0].name == "P");
  CHECK(spec.predicates[0].levels == std::vector<size_t>{0});
  CHECK(spec.predicates[1].name == "R");
  CHECK(spec.predicates[1].levels == std::vector<size_t>{0, 1});

  const FinitePresentation& merged = pr.structure;
  size_t star = merged.point_index(0, payload["star"].get<std::string>());
  size_t qi = merged.signature.predicate_index(spec.anchor_predicate);

  SECTION("the clean merge passes") {
    AxiomReport rep = check_theory_ts(merged, spec);
    CHECK(rep.suite == "TS");
    CHECK(rep.ok());
    for (const AxiomCheck& c : rep.checks) {
      CAPTURE(c.id, c.note);
      CHECK(c.status != "fail");
    }
    CHECK(entry(rep, "home_diameter").value == format_rational(src.home_diameter()));

    TheoryOptions below;
    below.r = rat(1, 4);
    CHECK(check_theory_ts(merged, spec, below).ok());
    TheoryOptions above;
    above.r = rat(3, 4);
    AxiomReport failed = check_theory_ts(merged, spec, above);
    CHECK_FALSE(failed.ok());
    CHECK(entry(failed, "home_diameter").status == "fail");
  }

  SECTION("anchor tampers") {
    FinitePresentation lifted = merged;
    lifted.tables[qi].set({star}, rat(1, 2));
    AxiomReport rep = check_theory_ts(lifted, spec);
    CHECK_FALSE(rep.ok());
    CHECK(entry(rep, "anchor_singleton").status == "fail");
    CHECK(entry(rep, "level_attained").status == "skipped");

    FinitePresentation doubled = merged;
    doubled.tables[qi].set({merged.point_index(0, "a0")}, Rational(0));
    AxiomReport rep2 = check_theory_ts(doubled, spec);
    CHECK(entry(rep2, "anchor_singleton").status == "fail");

    FinitePresentation off = merged;
    size_t a0 = merged.point_index(0, "a0");
    off.tables[qi].set({a0}, merged.tables[qi].at({a0}) + rat(1, 64));
    CHECK(entry(check_theory_ts(off, spec), "anchor_singleton").status == "fail");
  }

  SECTION("a distance off the ladder is caught") {
    FinitePresentation X = merged;
    size_t b0 = merged.point_index(0, "b0");
    X.metric[0].set(star, b0, rat(1, 3));
    X.tables[qi].set({b0}, rat(1, 3));
    AxiomReport rep = check_theory_ts(X, spec);
    CHECK_FALSE(rep.ok());
    CHECK(entry(rep, "anchor_singleton").status == "pass");
    CHECK(entry(rep, "anchor_distance_zeroset").status == "fail");
  }

  SECTION("an empty rung fails attainment") {
    FinitePresentation X = merged;
    for (const char* name : {"b0", "b1"}) {
      size_t p = merged.point_index(0, name);
      X.metric[0].set(star, p, rat(1, 4));
      X.tables[qi].set({p}, rat(1, 4));
    }
    AxiomReport rep = check_theory_ts(X, spec);
    CHECK_FALSE(rep.ok());
    CHECK(entry(rep, "level_attained").status == "fail");
    CHECK(entry(rep, "anchor_distance_zeroset").status == "pass");
    CHECK(entry(rep, "predicate_domain").status == "pass");
  }

  SECTION("off-domain values must be 1") {
    FinitePresentation X = merged;
    size_t ri = merged.signature.predicate_index("R");
    X.tables[ri].set({star, star}, rat(1, 2));
    AxiomReport rep = check_theory_ts(X, spec);
    CHECK_FALSE(rep.ok());
    const AxiomCheck& c = entry(rep, "predicate_domain");
    CHECK(c.status == "fail");
    CHECK(c.witness["predicate"] == "R");
    CHECK(entry(rep, "predicate_modulus").status == "pass");
  }

  SECTION("in-domain values obey the original modulus") {
    FinitePresentation X = merged;
    size_t pi = merged.signature.predicate_index("P");
    X.tables[pi].set({merged.point_index(0, "a0")}, Rational(1));
    AxiomReport rep = check_theory_ts(X, spec);
    CHECK_FALSE(rep.ok());
    CHECK(entry(rep, "predicate_modulus").status == "fail");
    CHECK(entry(rep, "predicate_domain").status == "pass");
  }

  SECTION("spec extraction and inputs are validated") {
    CHECK_THROWS_AS(theory_s_spec_from_trace(Json::object()), input_error);
    CHECK_THROWS_AS(check_theory_ts(two_point(), spec), input_error);
  }
}

TEST_CASE("axiom reports serialize with stable ids") {
  EncodedArtifact art = materialized(two_point(), 3);
  AxiomReport rep = check_theory_tl(art.space, art.metadata);

  REQUIRE(rep.checks.size() >= 3);
  CHECK(rep.checks[0].id == "tag_exists");
  CHECK(rep.checks[1].id == "tag_unique");
  CHECK(rep.checks[2].id == "tag_distance_zeroset");
  CHECK(rep.find("no_such_axiom") == nullptr);

  Json j = rep.to_json();
  CHECK(j["suite"] == "TL");
  CHECK(j["ok"] == true);
  REQUIRE(j["checks"].is_array());
  REQUIRE(j["checks"].size() == rep.checks.size());
  for (const Json& e : j["checks"]) {
    CHECK(e.contains("id"));
    CHECK(e.contains("status"));
    CHECK(e.contains("witness"));
    CHECK(e.contains("value"));
  }

  // Advisory disagreements are visible in the payload without flipping the
  // verdict.
  bool saw_advisory_fail = false;
  for (const Json& e : j["checks"])
    if (e.value("advisory", false) && e["status"] == "fail") saw_advisory_fail = true;
  CHECK(saw_advisory_fail);
  CHECK(rep.ok());
}
