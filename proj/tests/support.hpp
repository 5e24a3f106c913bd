#pragma once

#include <mscodec/pl_function.hpp>
#include <mscodec/presentation.hpp>
#include <mscodec/rational.hpp>

#include <array>
#include <random>
#include <set>
#include <vector>

// Shared helpers for the test suite. Everything is seeded mt19937_64 so
// failures reproduce across platforms; std::uniform_* distributions are
// deliberately avoided because their output is not pinned by the standard.

namespace testsup {

using mscodec::PLFunction;
using mscodec::Rational;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform integer in [lo, hi] via rejection, implementation-independent.
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

// Random rational p/q with 0 <= p/q <= 1 and q <= max_den.
inline Rational random_unit_rational(Rng& rng, std::uint64_t max_den = 64) {
  std::uint64_t q = rng.uniform(1, max_den);
  std::uint64_t p = rng.uniform(0, q);
  return Rational(p, q);
}

// Random canonical PL function on [0,1] with values in [0,1].
// force_zero_at_origin makes it usable as a modulus.
inline PLFunction random_pl(Rng& rng, bool force_zero_at_origin = false,
                            std::uint64_t max_den = 32) {
  std::set<Rational> xs;
  std::uint64_t interior = rng.uniform(0, 5);
  while (xs.size() < interior) {
    std::uint64_t q = rng.uniform(2, max_den);
    std::uint64_t p = rng.uniform(1, q - 1);
    xs.insert(Rational(p, q));
  }
  std::vector<PLFunction::Point> pts;
  pts.push_back({Rational(0), force_zero_at_origin ? Rational(0) : random_unit_rational(rng, max_den)});
  for (const auto& x : xs) pts.push_back({x, random_unit_rational(rng, max_den)});
  pts.push_back({Rational(1), random_unit_rational(rng, max_den)});
  return PLFunction(std::move(pts));
}

// Exhaustive triangle scan over a distance matrix, independent of any
// library-side checker: returns all ordered triples (i, via, j) where going
// through the middle point is shorter than the direct distance.
inline std::vector<std::array<size_t, 3>> violating_triples(const mscodec::SymMatrix& m) {
  std::vector<std::array<size_t, 3>> out;
  for (size_t i = 0; i < m.size(); ++i)
    for (size_t via = 0; via < m.size(); ++via)
      for (size_t j = 0; j < m.size(); ++j)
        if (m.at(i, j) > m.at(i, via) + m.at(via, j)) out.push_back({i, via, j});
  return out;
}

// Independent evaluation oracle: linear segment scan plus slope-form
// interpolation, sharing no code with PLFunction::operator().
inline Rational eval_oracle(const PLFunction& f, const Rational& x) {
  const auto& pts = f.points();
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i].x <= x && x <= pts[i + 1].x) {
      Rational slope = (pts[i + 1].y - pts[i].y) / (pts[i + 1].x - pts[i].x);
      return pts[i].y + slope * (x - pts[i].x);
    }
  }
  throw std::logic_error("eval_oracle: argument outside [0,1]");
}

}  // namespace testsup
