#pragma once

#include "interval.hpp"
#include "presentation.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

namespace mscodec {

// A structure given by approximate queries rather than tables. A query at
// precision k must return a dyadic value within 2^-k of the true one, so the
// true value lies in [answer - 2^-k, answer + 2^-k].
struct OraclePresentation {
  Signature signature;
  std::vector<size_t> sort_sizes;
  std::function<Rational(size_t sort, size_t i, size_t j, int k)> dist_query;
  std::function<Rational(size_t pred, const std::vector<size_t>& tuple, int k)> pred_query;

  IntervalValue dist(size_t sort, size_t i, size_t j, int k) const {
    return IntervalValue(dist_query(sort, i, j, k), pow2(-k));
  }

  IntervalValue pred(size_t p, const std::vector<size_t>& tuple, int k) const {
    return IntervalValue(pred_query(p, tuple, k), pow2(-k));
  }
};

// Wraps an exact presentation as an oracle. Answers are rounded to dyadics
// with denominator 2^k, which keeps them within the 2^-k tolerance.
inline OraclePresentation make_oracle(FinitePresentation s) {
  OraclePresentation o;
  o.signature = s.signature;
  for (size_t sort = 0; sort < s.sort_count(); ++sort) o.sort_sizes.push_back(s.point_count(sort));
  auto shared = std::make_shared<FinitePresentation>(std::move(s));
  o.dist_query = [shared](size_t sort, size_t i, size_t j, int k) {
    return round_to_dyadic(shared->dist(sort, i, j), k);
  };
  o.pred_query = [shared](size_t pred, const std::vector<size_t>& tuple, int k) {
    return round_to_dyadic(shared->tables.at(pred).at(tuple), k);
  };
  return o;
}

// Oracle wrapper that remembers every answer and intersects the implied
// intervals per queried cell. If an intersection comes up empty the answers
// cannot all be within tolerance of one fixed value, and the oracle is
// reported as incoherent. Safe to query from several threads.
class CheckedOracle {
 public:
  explicit CheckedOracle(OraclePresentation inner) : inner_(std::move(inner)) {}

  const Signature& signature() const { return inner_.signature; }
  const std::vector<size_t>& sort_sizes() const { return inner_.sort_sizes; }

  IntervalValue dist(size_t sort, size_t i, size_t j, int k) {
    if (j < i) std::swap(i, j);
    IntervalValue got = inner_.dist(sort, i, j, k);
    remember(dist_known_, std::make_tuple(sort, i, j), got, "distance");
    return got;
  }

  IntervalValue pred(size_t p, const std::vector<size_t>& tuple, int k) {
    IntervalValue got = inner_.pred(p, tuple, k);
    remember(pred_known_, std::make_pair(p, tuple), got, "predicate");
    return got;
  }

 private:
  template <typename Map, typename Key>
  void remember(Map& map, const Key& key, const IntervalValue& got, const char* what) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, fresh] = map.emplace(key, got);
    if (fresh) return;
    Rational lo = rat_max(it->second.lo(), got.lo());
    Rational hi = rat_min(it->second.hi(), got.hi());
    if (lo > hi)
      throw incoherent_oracle_error(std::string("oracle answers for a ") + what +
                                    " cell admit no common value");
    it->second = IntervalValue::from_bounds(lo, hi);
  }

  OraclePresentation inner_;
  std::mutex mutex_;
  std::map<std::tuple<size_t, size_t, size_t>, IntervalValue> dist_known_;
  std::map<std::pair<size_t, std::vector<size_t>>, IntervalValue> pred_known_;
};

}  // namespace mscodec
