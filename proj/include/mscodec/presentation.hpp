#pragma once

#include "signature.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mscodec {

// Symmetric matrix of exact rationals with a zero diagonal by construction.
// Storage is the full square for O(1) lookup; set() writes both mirror cells.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(size_t n) : n_(n), cells_(n * n, Rational(0)) {}

  size_t size() const { return n_; }

  const Rational& at(size_t i, size_t j) const {
    check(i, j);
    return cells_[i * n_ + j];
  }

  void set(size_t i, size_t j, const Rational& v) {
    check(i, j);
    cells_[i * n_ + j] = v;
    cells_[j * n_ + i] = v;
  }

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  void check(size_t i, size_t j) const {
    if (i >= n_ || j >= n_) throw input_error("matrix index out of range");
  }

  size_t n_ = 0;
  std::vector<Rational> cells_;
};

// Dense table of predicate values over tuples of point indices, row major in
// the argument order. shape()[k] is the point count of the k-th argument sort.
class PredTable {
 public:
  PredTable() = default;
  explicit PredTable(std::vector<size_t> shape) : shape_(std::move(shape)) {
    size_t total = 1;
    for (size_t s : shape_) total *= s;
    cells_.assign(total, Rational(0));
  }

  const std::vector<size_t>& shape() const { return shape_; }
  size_t cell_count() const { return cells_.size(); }

  size_t flat_index(const std::vector<size_t>& tuple) const {
    if (tuple.size() != shape_.size()) throw input_error("tuple length does not match predicate arity");
    size_t flat = 0;
    for (size_t k = 0; k < tuple.size(); ++k) {
      if (tuple[k] >= shape_[k]) throw input_error("tuple index out of range");
      flat = flat * shape_[k] + tuple[k];
    }
    return flat;
  }

  const Rational& at(const std::vector<size_t>& tuple) const { return cells_[flat_index(tuple)]; }
  void set(const std::vector<size_t>& tuple, const Rational& v) { cells_[flat_index(tuple)] = v; }

  friend bool operator==(const PredTable&, const PredTable&) = default;

 private:
  std::vector<size_t> shape_;
  std::vector<Rational> cells_;
};

// Calls fn with every tuple in the box [0,shape[0]) x ... x [0,shape[k-1]).
// An empty shape yields the single empty tuple. A zero extent yields nothing.
inline void for_each_tuple(const std::vector<size_t>& shape,
                           const std::function<void(const std::vector<size_t>&)>& fn) {
  for (size_t s : shape)
    if (s == 0) return;
  std::vector<size_t> tuple(shape.size(), 0);
  while (true) {
    fn(tuple);
    size_t k = shape.size();
    while (k > 0) {
      --k;
      if (++tuple[k] < shape[k]) break;
      tuple[k] = 0;
      if (k == 0) return;
    }
    if (shape.empty()) return;
  }
}

struct PointId {
  size_t sort = 0;
  size_t index = 0;

  friend bool operator==(const PointId&, const PointId&) = default;
};

// A finite metric structure given by explicit tables: named points per sort,
// one distance matrix per sort, and one value table per predicate symbol.
struct FinitePresentation {
  Signature signature;
  std::vector<std::vector<std::string>> points;
  std::vector<SymMatrix> metric;
  std::vector<PredTable> tables;

  size_t sort_count() const { return signature.sorts.size(); }
  size_t point_count(size_t sort) const { return points.at(sort).size(); }

  size_t point_index(size_t sort, const std::string& name) const {
    const auto& ns = points.at(sort);
    for (size_t i = 0; i < ns.size(); ++i)
      if (ns[i] == name) return i;
    throw input_error("unknown point \"" + name + "\" in sort " + signature.sorts.at(sort));
  }

  const Rational& dist(size_t sort, size_t i, size_t j) const { return metric.at(sort).at(i, j); }

  Rational query_distance(PointId a, PointId b) const {
    if (a.sort != b.sort) throw input_error("distance queried across sorts");
    return dist(a.sort, a.index, b.index);
  }

  Rational query_predicate(size_t pred, const std::vector<PointId>& args) const {
    const auto& decl = signature.predicates.at(pred);
    if (args.size() != decl.arity.size()) throw input_error("argument count does not match predicate arity");
    std::vector<size_t> tuple(args.size());
    for (size_t k = 0; k < args.size(); ++k) {
      if (args[k].sort != decl.arity[k]) throw input_error("argument sort does not match predicate arity");
      tuple[k] = args[k].index;
    }
    return tables.at(pred).at(tuple);
  }

  Rational query_predicate(const std::string& name, const std::vector<PointId>& args) const {
    return query_predicate(signature.predicate_index(name), args);
  }

  // Largest pairwise distance within one sort; zero for a singleton.
  Rational sort_diameter(size_t sort) const {
    Rational best(0);
    const auto& m = metric.at(sort);
    for (size_t i = 0; i < m.size(); ++i)
      for (size_t j = i + 1; j < m.size(); ++j) best = rat_max(best, m.at(i, j));
    return best;
  }

  Rational home_diameter() const { return sort_diameter(signature.home_sort); }

  // Shape of the value table a predicate over this point set must have.
  std::vector<size_t> table_shape(size_t pred) const {
    std::vector<size_t> shape;
    for (size_t sort : signature.predicates.at(pred).arity) shape.push_back(point_count(sort));
    return shape;
  }

  // Largest coordinatewise distance between two argument tuples.
  Rational tuple_distance(size_t pred, const std::vector<size_t>& a, const std::vector<size_t>& b) const {
    const auto& decl = signature.predicates.at(pred);
    Rational best(0);
    for (size_t k = 0; k < decl.arity.size(); ++k) best = rat_max(best, dist(decl.arity[k], a[k], b[k]));
    return best;
  }

  friend bool operator==(const FinitePresentation&, const FinitePresentation&) = default;
};

// Restriction to the chosen point indices per sort (order preserved). Indices
// must be strictly increasing and in range; predicates and metric restrict.
inline FinitePresentation substructure(const FinitePresentation& s,
                                       const std::vector<std::vector<size_t>>& keep) {
  if (keep.size() != s.sort_count()) throw input_error("substructure needs one index list per sort");
  FinitePresentation out;
  out.signature = s.signature;
  out.points.resize(s.sort_count());
  out.metric.resize(s.sort_count());
  for (size_t sort = 0; sort < s.sort_count(); ++sort) {
    const auto& ks = keep[sort];
    for (size_t i = 0; i < ks.size(); ++i) {
      if (ks[i] >= s.point_count(sort)) throw input_error("substructure index out of range");
      if (i > 0 && ks[i] <= ks[i - 1]) throw input_error("substructure indices must be strictly increasing");
      out.points[sort].push_back(s.points[sort][ks[i]]);
    }
    SymMatrix m(ks.size());
    for (size_t i = 0; i < ks.size(); ++i)
      for (size_t j = i + 1; j < ks.size(); ++j) m.set(i, j, s.dist(sort, ks[i], ks[j]));
    out.metric[sort] = std::move(m);
  }
  for (size_t p = 0; p < s.signature.predicates.size(); ++p) {
    const auto& arity = s.signature.predicates[p].arity;
    std::vector<size_t> shape;
    for (size_t sort : arity) shape.push_back(keep[sort].size());
    PredTable t(shape);
    for_each_tuple(shape, [&](const std::vector<size_t>& tuple) {
      std::vector<size_t> orig(tuple.size());
      for (size_t k = 0; k < tuple.size(); ++k) orig[k] = keep[arity[k]][tuple[k]];
      t.set(tuple, s.tables[p].at(orig));
    });
    out.tables.push_back(std::move(t));
  }
  return out;
}

}  // namespace mscodec
