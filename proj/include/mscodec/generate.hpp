#pragma once

#include "validate.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace mscodec {

// Knobs for random structure generation. Absent counts are sampled from the
// default ranges (1-2 sorts, 2-6 points per sort, 0-3 predicates). Every
// sampled number is a multiple of 1/denominator, so persisted artifacts
// keep bounded denominators.
struct GenerateConfig {
  std::uint64_t seed = 0;
  std::optional<size_t> sorts;
  std::optional<size_t> points;
  std::optional<size_t> predicates;
  std::uint64_t denominator = 64;
};

namespace detail {

// Deterministic uniform integers on top of the standard engine. The
// distribution is done by rejection here because std::uniform_int_distribution
// is not pinned by the standard, and generated corpora must be reproducible
// byte for byte across platforms.
class SampleStream {
 public:
  explicit SampleStream(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
    std::uint64_t span = hi - lo + 1;
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / span * span;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return lo + v % span;
  }

  bool coin() { return uniform(0, 1) == 1; }

 private:
  std::mt19937_64 eng_;
};

// A random metric on the 1/den grid. Two families: "band" metrics sample
// every distance from [lo, min(2 lo, 1)], which satisfies the triangle
// inequality outright because no distance exceeds twice any other; "line"
// metrics place points at distinct grid coordinates and read distances off
// the line, which embeds isometrically and needs no check either.
inline SymMatrix sample_metric(SampleStream& rng, size_t n, std::uint64_t den) {
  SymMatrix m(n);
  if (n < 2) return m;
  if (rng.coin()) {
    std::uint64_t lo = rng.uniform(den / 8 > 0 ? den / 8 : 1, den / 2);
    std::uint64_t hi = std::min(2 * lo, den);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j)
        m.set(i, j, Rational(rng.uniform(lo, hi), den));
  } else {
    std::set<std::uint64_t> coords;
    while (coords.size() < n) coords.insert(rng.uniform(0, den));
    std::vector<std::uint64_t> c(coords.begin(), coords.end());
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j)
        m.set(i, j, Rational(c[j] - c[i], den));
  }
  return m;
}

inline Rational clamp_unit(const Rational& v) {
  if (v < 0) return Rational(0);
  if (v > 1) return Rational(1);
  return v;
}

// A random predicate that obeys an L-Lipschitz modulus by construction:
// min/max combinations of pieces clamp01(c +- sum of coordinate distances
// to fixed anchors), where each piece touches at most L coordinates. Each
// piece is then L-Lipschitz in the max-coordinate metric and min/max keep
// that, so validation cannot reject it.
inline PredTable sample_predicate(SampleStream& rng, const FinitePresentation& s,
                                  const std::vector<size_t>& arity, std::uint64_t L,
                                  std::uint64_t den) {
  struct Piece {
    Rational base;
    std::vector<size_t> coords;   // argument positions the piece reads
    std::vector<size_t> anchors;  // anchor point per read position
    std::vector<bool> negate;     // subtract instead of add
  };
  size_t piece_count = rng.uniform(1, 3);
  std::vector<Piece> pieces;
  for (size_t i = 0; i < piece_count; ++i) {
    Piece p;
    p.base = Rational(rng.uniform(0, den), den);
    size_t touches = arity.empty() ? 0 : rng.uniform(0, std::min<std::uint64_t>(L, arity.size()));
    for (size_t t = 0; t < touches; ++t) {
      size_t pos = rng.uniform(0, arity.size() - 1);
      p.coords.push_back(pos);
      p.anchors.push_back(rng.uniform(0, s.point_count(arity[pos]) - 1));
      p.negate.push_back(rng.coin());
    }
    pieces.push_back(std::move(p));
  }
  bool use_min = rng.coin();

  std::vector<size_t> shape;
  for (size_t sort : arity) shape.push_back(s.point_count(sort));
  PredTable table(shape);
  for_each_tuple(shape, [&](const std::vector<size_t>& tuple) {
    std::optional<Rational> acc;
    for (const Piece& p : pieces) {
      Rational v = p.base;
      for (size_t t = 0; t < p.coords.size(); ++t) {
        Rational gap = s.dist(arity[p.coords[t]], tuple[p.coords[t]], p.anchors[t]);
        v = p.negate[t] ? Rational(v - gap) : Rational(v + gap);
      }
      v = clamp_unit(v);
      if (!acc)
        acc = v;
      else
        acc = use_min ? rat_min(*acc, v) : rat_max(*acc, v);
    }
    table.set(tuple, *acc);
  });
  return table;
}

}  // namespace detail

// Samples a random valid finite structure. Metrics and predicate tables are
// drawn from families that satisfy the axioms by construction, and the
// result is still validated and re-sampled on failure, so a returned
// structure always passes validate_structure. Deterministic in the seed.
inline FinitePresentation generate_structure(const GenerateConfig& cfg = {}) {
  if (cfg.denominator < 8) throw input_error("generator denominator must be at least 8");
  if (cfg.sorts && (*cfg.sorts < 1 || *cfg.sorts > 4))
    throw input_error("generator sort count must be between 1 and 4");
  if (cfg.points && (*cfg.points < 2 || *cfg.points > 64))
    throw input_error("generator point count must be between 2 and 64");
  if (cfg.predicates && *cfg.predicates > 8)
    throw input_error("generator predicate count must be at most 8");

  detail::SampleStream rng(cfg.seed);
  static const char* kSortNames[] = {"A", "B", "C", "D"};
  static const char kPointPrefix[] = {'a', 'b', 'c', 'd'};

  for (int attempt = 0; attempt < 1000; ++attempt) {
    FinitePresentation s;
    size_t sorts = cfg.sorts ? *cfg.sorts : rng.uniform(1, 2);
    s.signature.home_sort = 0;
    for (size_t k = 0; k < sorts; ++k) {
      s.signature.sorts.push_back(kSortNames[k]);
      size_t n = cfg.points ? *cfg.points : rng.uniform(2, 6);
      std::vector<std::string> names;
      for (size_t i = 0; i < n; ++i) names.push_back(kPointPrefix[k] + std::to_string(i));
      s.points.push_back(std::move(names));
      s.metric.push_back(detail::sample_metric(rng, n, cfg.denominator));
    }

    size_t preds = cfg.predicates ? *cfg.predicates : rng.uniform(0, 3);
    for (size_t p = 0; p < preds; ++p) {
      std::vector<size_t> arity;
      // Arity stays at most 2 so the sort-merge product copies stay small
      // enough for exhaustive downstream checks.
      size_t args = rng.uniform(0, 2);
      for (size_t a = 0; a < args; ++a) arity.push_back(rng.uniform(0, sorts - 1));
      std::uint64_t L = std::uint64_t(1) << rng.uniform(0, 2);
      PLFunction modulus =
          L == 1 ? PLFunction::identity() : PLFunction::lipschitz_modulus(Rational(L));
      s.signature.predicates.push_back({"R" + std::to_string(p), arity, modulus});
      s.tables.push_back(detail::sample_predicate(rng, s, arity, L, cfg.denominator));
    }

    if (validate_structure(s).ok()) return s;
  }
  throw input_error("generator failed to produce a valid structure");
}

}  // namespace mscodec
