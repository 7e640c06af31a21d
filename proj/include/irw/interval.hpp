#pragma once
#include "irw/lp.hpp"
#include "irw/poly.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace irw {

// Extended rational: finite value or +/- infinity.
struct ExtRat {
  int cls = 0;  // -1: -inf, 0: finite, +1: +inf
  Rat v = 0;
  static ExtRat ninf() { return {-1, 0}; }
  static ExtRat pinf() { return {+1, 0}; }
  static ExtRat fin(const Rat& q) { return {0, q}; }
  bool finite() const { return cls == 0; }
};

bool ext_less(const ExtRat& a, const ExtRat& b);

// Closed interval with possibly infinite endpoints.
struct Ival {
  ExtRat lo = ExtRat::ninf();
  ExtRat hi = ExtRat::pinf();
  bool contains(const Rat& q) const;
  bool empty() const;  // lo > hi
};

Ival iadd(const Ival& a, const Ival& b);
Ival ineg(const Ival& a);
Ival imul(const Ival& a, const Ival& b);
Ival ipow(const Ival& a, int k);
Ival iscale(const Ival& a, const Rat& c);
Ival iintersect(const Ival& a, const Ival& b);

using Box = std::map<int, Ival>;  // var idx -> interval

// Sound enclosure of p over the box: intersection of a monomial-wise
// evaluation (exact even powers) and a recursive Horner evaluation
// (keeps correlations like z*(z+1) on unbounded boxes).
Ival ieval(const Polynomial& p, const Box& box);

enum class QStatus { Sat, Unsat, Unknown };

struct QResult {
  QStatus status = QStatus::Unknown;
  std::map<int, Rat> point;  // witness when Sat
  long nodes = 0;
};

// Decide satisfiability of a conjunction of polynomial atoms over the reals.
// Complete for affine systems (delegates to the exact LP). Otherwise proves
// Unsat by monomial-relaxation LP plus branch-and-prune with exact interval
// arithmetic, and Sat by exact evaluation at probed rational points.
QResult interval_solve(const std::vector<Inequality>& atoms, long node_budget = 20000,
                       std::uint64_t seed = 0);

}  // namespace irw
