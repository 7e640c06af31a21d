#include "irw/interval.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace irw {

bool ext_less(const ExtRat& a, const ExtRat& b) {
  if (a.cls != b.cls) return a.cls < b.cls;
  if (a.cls != 0) return false;
  return a.v < b.v;
}

bool Ival::contains(const Rat& q) const {
  if (lo.finite() && q < lo.v) return false;
  if (lo.cls > 0) return false;
  if (hi.finite() && q > hi.v) return false;
  if (hi.cls < 0) return false;
  return true;
}

bool Ival::empty() const { return ext_less(hi, lo); }

static ExtRat eadd(const ExtRat& a, const ExtRat& b) {
  if (a.cls != 0) return a;
  if (b.cls != 0) return b;
  return ExtRat::fin(a.v + b.v);
}

static int esign(const ExtRat& a) {
  if (a.cls != 0) return a.cls;
  return a.v > 0 ? 1 : (a.v < 0 ? -1 : 0);
}

static ExtRat eprod(const ExtRat& a, const ExtRat& b) {
  if (a.finite() && b.finite()) return ExtRat::fin(a.v * b.v);
  int s = esign(a) * esign(b);
  if (s == 0) return ExtRat::fin(0);  // 0 * inf endpoint rule (sound for intervals)
  return s > 0 ? ExtRat::pinf() : ExtRat::ninf();
}

Ival iadd(const Ival& a, const Ival& b) { return {eadd(a.lo, b.lo), eadd(a.hi, b.hi)}; }

Ival ineg(const Ival& a) {
  auto neg = [](const ExtRat& e) {
    if (e.cls != 0) return e.cls > 0 ? ExtRat::ninf() : ExtRat::pinf();
    return ExtRat::fin(-e.v);
  };
  return {neg(a.hi), neg(a.lo)};
}

Ival imul(const Ival& a, const Ival& b) {
  auto is_zero = [](const Ival& x) {
    return x.lo.finite() && x.hi.finite() && x.lo.v == 0 && x.hi.v == 0;
  };
  if (is_zero(a) || is_zero(b)) return {ExtRat::fin(0), ExtRat::fin(0)};
  ExtRat cands[4] = {eprod(a.lo, b.lo), eprod(a.lo, b.hi), eprod(a.hi, b.lo),
                     eprod(a.hi, b.hi)};
  Ival r{cands[0], cands[0]};
  for (int i = 1; i < 4; ++i) {
    if (ext_less(cands[i], r.lo)) r.lo = cands[i];
    if (ext_less(r.hi, cands[i])) r.hi = cands[i];
  }
  return r;
}

Ival iscale(const Ival& a, const Rat& c) {
  if (c == 0) return {ExtRat::fin(0), ExtRat::fin(0)};
  Ival k{ExtRat::fin(c), ExtRat::fin(c)};
  return imul(a, k);
}

Ival ipow(const Ival& a, int k) {
  if (k == 0) return {ExtRat::fin(1), ExtRat::fin(1)};
  if (k == 1) return a;
  auto epow = [](const ExtRat& e, int n) {
    if (e.cls != 0) return (n % 2 == 0 || e.cls > 0) ? ExtRat::pinf() : ExtRat::ninf();
    Rat r = 1;
    for (int i = 0; i < n; ++i) r *= e.v;
    return ExtRat::fin(r);
  };
  if (k % 2 == 1) return {epow(a.lo, k), epow(a.hi, k)};
  // Even power: interval of |a|^k.
  auto eabs = [](const ExtRat& e) {
    if (e.cls != 0) return ExtRat::pinf();
    return ExtRat::fin(e.v >= 0 ? e.v : Rat(-e.v));
  };
  ExtRat al = eabs(a.lo), ah = eabs(a.hi);
  ExtRat m = ext_less(al, ah) ? ah : al;
  if (a.contains(0)) return {ExtRat::fin(0), epow(m, k)};
  ExtRat mn = ext_less(al, ah) ? al : ah;
  return {epow(mn, k), epow(m, k)};
}

Ival iintersect(const Ival& a, const Ival& b) {
  Ival r;
  r.lo = ext_less(a.lo, b.lo) ? b.lo : a.lo;
  r.hi = ext_less(a.hi, b.hi) ? a.hi : b.hi;
  return r;
}

namespace {

Ival ieval_monomials(const Polynomial& p, const Box& box) {
  Ival sum{ExtRat::fin(0), ExtRat::fin(0)};
  for (auto& [m, c] : p.terms()) {
    Ival t{ExtRat::fin(1), ExtRat::fin(1)};
    for (auto& [v, e] : m.exps) {
      auto it = box.find(v);
      Ival vb = it != box.end() ? it->second : Ival{};
      t = imul(t, ipow(vb, e));
    }
    sum = iadd(sum, iscale(t, c));
  }
  return sum;
}

Ival ieval_horner(const Polynomial& p, const Box& box);

Ival ieval_both(const Polynomial& p, const Box& box) {
  return iintersect(ieval_monomials(p, box), ieval_horner(p, box));
}

Ival ieval_horner(const Polynomial& p, const Box& box) {
  if (p.is_constant()) {
    Rat c = p.constant_term();
    return {ExtRat::fin(c), ExtRat::fin(c)};
  }
  // Pick the variable with the highest degree (ties: lowest index).
  int best = -1, bestdeg = 0;
  for (auto& [m, c] : p.terms())
    for (auto& [v, e] : m.exps)
      if (e > bestdeg || (e == bestdeg && best != -1 && v < best)) {
        best = v;
        bestdeg = e;
      }
  // Group p = sum_k v^k q_k.
  std::map<int, Polynomial> qs;
  for (auto& [m, c] : p.terms()) {
    int k = m.degree_in(best);
    Monomial rest;
    for (auto& [v, e] : m.exps)
      if (v != best) rest.exps.emplace_back(v, e);
    qs[k].add_term(rest, c);
  }
  auto it = box.find(best);
  Ival vb = it != box.end() ? it->second : Ival{};
  int top = qs.rbegin()->first;
  Ival h = ieval_both(qs.count(top) ? qs[top] : Polynomial{}, box);
  for (int k = top - 1; k >= 0; --k) {
    h = imul(vb, h);
    auto qit = qs.find(k);
    if (qit != qs.end()) h = iadd(h, ieval_both(qit->second, box));
  }
  return h;
}

}  // namespace

Ival ieval(const Polynomial& p, const Box& box) { return ieval_both(p, box); }

namespace {

bool atom_ok(const Inequality& a, const Rat& v) {
  switch (a.rel) {
    case Rel::Geq: return v >= 0;
    case Rel::Gt:
    case Rel::Strong: return v > 0;
    case Rel::Eq: return v == 0;
  }
  return false;
}

bool point_sat(const std::vector<Inequality>& atoms, const std::map<int, Rat>& pt) {
  for (auto& a : atoms)
    if (!atom_ok(a, a.lhs.eval(pt))) return false;
  return true;
}

// Can the atom be ruled out over the box?
bool atom_infeasible(const Inequality& a, const Box& box) {
  Ival r = ieval(a.lhs, box);
  switch (a.rel) {
    case Rel::Geq: return r.hi.finite() && r.hi.v < 0;
    case Rel::Gt:
    case Rel::Strong: return r.hi.finite() && r.hi.v <= 0;
    case Rel::Eq: return !r.contains(0);
  }
  return false;
}

Rat midpoint(const Ival& iv) {
  if (iv.lo.finite() && iv.hi.finite()) return (iv.lo.v + iv.hi.v) / 2;
  if (iv.lo.finite()) return iv.lo.v + 1;
  if (iv.hi.finite()) return iv.hi.v - 1;
  return 0;
}

}  // namespace

QResult interval_solve(const std::vector<Inequality>& atoms, long node_budget,
                       std::uint64_t seed) {
  QResult res;
  std::vector<Inequality> work;
  std::set<int> varset;
  for (auto& a : atoms) {
    if (a.lhs.is_constant()) {
      if (!atom_ok(a, a.lhs.constant_term())) {
        res.status = QStatus::Unsat;
        return res;
      }
      continue;
    }
    work.push_back(a);
    for (int v : a.lhs.vars()) varset.insert(v);
  }
  if (work.empty()) {
    res.status = QStatus::Sat;
    return res;
  }

  // Affine systems are decided exactly by the LP.
  bool affine = std::all_of(work.begin(), work.end(),
                            [](const Inequality& a) { return is_affine(a.lhs); });
  if (affine) {
    std::vector<LinCon> rows;
    for (auto& a : work) rows.push_back(to_lincon(a));
    auto p = lp_point(rows);
    if (p) {
      res.status = QStatus::Sat;
      for (int v : varset) res.point[v] = p->count(v) ? p->at(v) : Rat(0);
    } else {
      res.status = QStatus::Unsat;
    }
    return res;
  }

  // Monomial relaxation: one LP variable per distinct monomial; all-even
  // monomials get a nonnegativity fact. Infeasibility of the relaxation is
  // sound for the original system.
  int next_id = varset.empty() ? 0 : (*varset.rbegin() + 1);
  std::map<Monomial, int, MonoOrder> mono_id;
  auto id_of = [&](const Monomial& m) {
    if (m.exps.size() == 1 && m.exps[0].second == 1) return m.exps[0].first;
    auto it = mono_id.find(m);
    if (it != mono_id.end()) return it->second;
    int id = next_id++;
    mono_id[m] = id;
    return id;
  };
  std::vector<LinCon> relax;
  for (auto& a : work) {
    LinCon c;
    c.rel = a.rel == Rel::Strong ? Rel::Gt : a.rel;
    for (auto& [m, co] : a.lhs.terms()) {
      if (m.exps.empty())
        c.t.b = co;
      else
        c.t.a[id_of(m)] += co;
    }
    relax.push_back(c);
  }
  for (auto& [m, id] : mono_id) {
    bool all_even = std::all_of(m.exps.begin(), m.exps.end(),
                                [](auto& ve) { return ve.second % 2 == 0; });
    if (all_even) {
      LinCon c;
      c.t.a[id] = 1;
      relax.push_back(c);
    }
  }
  auto rpoint = lp_point(relax);
  if (!rpoint) {
    res.status = QStatus::Unsat;
    return res;
  }

  // Initial box from the relaxation (strict rows relaxed to closures).
  std::vector<LinCon> closure = relax;
  for (auto& c : closure)
    if (c.rel == Rel::Gt) c.rel = Rel::Geq;
  Box root;
  for (int v : varset) {
    Ival iv;
    LinTerm up;
    up.a[v] = 1;
    auto mx = lp_maximize(up, closure);
    if (mx.status == LpOutcome::Optimal) iv.hi = ExtRat::fin(mx.value);
    LinTerm dn;
    dn.a[v] = -1;
    auto mn = lp_maximize(dn, closure);
    if (mn.status == LpOutcome::Optimal) iv.lo = ExtRat::fin(-mn.value);
    root[v] = iv;
  }

  // Probes: relaxation point, box centers, random rational points.
  std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL);
  auto probe = [&](const std::map<int, Rat>& pt) {
    if (point_sat(work, pt)) {
      res.status = QStatus::Sat;
      res.point = pt;
      return true;
    }
    return false;
  };
  {
    std::map<int, Rat> pt;
    for (int v : varset) pt[v] = rpoint->count(v) ? rpoint->at(v) : Rat(0);
    if (probe(pt)) return res;
    for (auto& [v, iv] : root) pt[v] = midpoint(iv);
    if (probe(pt)) return res;
    for (int it = 0; it < 64; ++it) {
      for (auto& [v, iv] : root) {
        Rat lo = iv.lo.finite() ? iv.lo.v : Rat(-100);
        Rat hi = iv.hi.finite() ? iv.hi.v : Rat(100);
        if (hi < lo) std::swap(lo, hi);
        Rat t(static_cast<long>(rng() % 1000), 999);
        pt[v] = lo + (hi - lo) * t;
      }
      if (probe(pt)) return res;
    }
  }

  // Branch and prune.
  std::vector<Box> stack = {root};
  bool unknown_leaf = false;
  long nodes = 0;
  const Rat min_width(1, 1000000);
  while (!stack.empty()) {
    if (++nodes > node_budget) {
      res.nodes = nodes;
      res.status = QStatus::Unknown;
      return res;
    }
    Box box = std::move(stack.back());
    stack.pop_back();
    bool pruned = false;
    for (auto& a : work)
      if (atom_infeasible(a, box)) {
        pruned = true;
        break;
      }
    if (pruned) continue;
    std::map<int, Rat> center;
    for (auto& [v, iv] : box) center[v] = midpoint(iv);
    if (probe(center)) {
      res.nodes = nodes;
      return res;
    }
    // Choose split variable: any infinite side first, else the widest.
    int sv = -1;
    bool sv_inf = false;
    Rat widest = -1;
    for (auto& [v, iv] : box) {
      if (!iv.lo.finite() || !iv.hi.finite()) {
        sv = v;
        sv_inf = true;
        break;
      }
      Rat w = iv.hi.v - iv.lo.v;
      if (w > widest) {
        widest = w;
        sv = v;
      }
    }
    if (!sv_inf && widest < min_width) {
      unknown_leaf = true;  // tiny box, cannot prune or certify
      continue;
    }
    Ival iv = box[sv];
    Rat cut;
    if (!iv.lo.finite() && !iv.hi.finite())
      cut = 0;
    else if (!iv.lo.finite())
      cut = iv.hi.v - std::max(Rat(1), Rat(iv.hi.v >= 0 ? iv.hi.v : Rat(-iv.hi.v)));
    else if (!iv.hi.finite())
      cut = iv.lo.v + std::max(Rat(1), Rat(iv.lo.v >= 0 ? iv.lo.v : Rat(-iv.lo.v)));
    else
      cut = (iv.lo.v + iv.hi.v) / 2;
    Box left = box, right = box;
    left[sv].hi = ExtRat::fin(cut);
    right[sv].lo = ExtRat::fin(cut);
    // Process the finite half first.
    if (!iv.lo.finite()) {
      stack.push_back(std::move(left));
      stack.push_back(std::move(right));
    } else {
      stack.push_back(std::move(right));
      stack.push_back(std::move(left));
    }
  }
  res.nodes = nodes;
  res.status = unknown_leaf ? QStatus::Unknown : QStatus::Unsat;
  return res;
}

}  // namespace irw
