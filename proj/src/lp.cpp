#include "irw/lp.hpp"

#include <algorithm>
#include <stdexcept>

namespace irw {

bool is_affine(const Polynomial& p) { return p.total_degree() <= 1; }

LinCon to_lincon(const Inequality& a) {
  if (!is_affine(a.lhs)) throw std::invalid_argument("to_lincon: nonlinear atom");
  LinCon c;
  c.rel = a.rel == Rel::Strong ? Rel::Gt : a.rel;
  for (auto& [m, co] : a.lhs.terms()) {
    if (m.exps.empty())
      c.t.b = co;
    else
      c.t.a[m.exps[0].first] = co;
  }
  return c;
}

namespace {

// Dense simplex on: maximize c·z subject to A z = rhs, z >= 0.
// Returns false if infeasible detected in phase 1; true otherwise, with the
// final basic solution in z. Unbounded is reported via the flag.
struct Tableau {
  int m, n;
  std::vector<std::vector<Rat>> A;  // m x n
  std::vector<Rat> rhs;             // >= 0 invariant
  std::vector<int> basis;           // column basic in each row

  void pivot(int r, int col) {
    Rat p = A[r][col];
    for (int j = 0; j < n; ++j) A[r][j] /= p;
    rhs[r] /= p;
    for (int i = 0; i < m; ++i) {
      if (i == r || A[i][col] == 0) continue;
      Rat f = A[i][col];
      for (int j = 0; j < n; ++j) A[i][j] -= f * A[r][j];
      rhs[i] -= f * rhs[r];
    }
    basis[r] = col;
  }

  // Maximize c·z from the current basic feasible solution.
  // Returns true if optimal reached, false if unbounded.
  // Dantzig pricing (largest reduced cost) for speed; after a long run of
  // degenerate pivots, fall back to Bland's rule, which cannot cycle.
  bool solve(const std::vector<Rat>& c) {
    long degen = 0;
    bool bland = false;
    while (true) {
      // Reduced costs: cbar_j = c_j - sum_i c_{basis_i} A_{i,j}
      std::vector<Rat> dual(m);
      for (int i = 0; i < m; ++i) dual[i] = c[basis[i]];
      int enter = -1;
      Rat entc;
      for (int j = 0; j < n; ++j) {
        Rat cbar = c[j];
        for (int i = 0; i < m; ++i)
          if (A[i][j] != 0) cbar -= dual[i] * A[i][j];
        if (cbar > 0) {
          if (bland) {
            enter = j;  // first improving column
            break;
          }
          if (enter < 0 || cbar > entc) {
            enter = j;
            entc = cbar;
          }
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      Rat best;
      for (int i = 0; i < m; ++i) {
        if (A[i][enter] <= 0) continue;
        Rat ratio = rhs[i] / A[i][enter];
        if (leave < 0 || ratio < best || (ratio == best && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      if (!bland) {
        degen = best == 0 ? degen + 1 : 0;
        if (degen > 2L * m + 50) bland = true;
      }
      pivot(leave, enter);
    }
  }
};

}  // namespace

LpOutcome lp_maximize(const LinTerm& obj, const std::vector<LinCon>& rows) {
  // Collect variables.
  std::map<int, int> col_of;  // var idx -> column of positive part
  auto touch = [&](int v) {
    if (!col_of.count(v)) {
      int k = static_cast<int>(col_of.size());
      col_of[v] = k;
    }
  };
  for (auto& [v, c] : obj.a) touch(v);
  for (auto& r : rows)
    for (auto& [v, c] : r.t.a) touch(v);
  int nv = static_cast<int>(col_of.size());

  int m = static_cast<int>(rows.size());
  // Columns: x+ (nv), x- (nv), slacks (one per Geq row), artificials (m).
  int nslack = 0;
  for (auto& r : rows) {
    if (r.rel == Rel::Gt) throw std::invalid_argument("lp_maximize: strict row");
    if (r.rel == Rel::Geq) ++nslack;
  }
  int n = 2 * nv + nslack + m;
  Tableau T;
  T.m = m;
  T.n = n;
  T.A.assign(m, std::vector<Rat>(n, Rat(0)));
  T.rhs.assign(m, Rat(0));
  T.basis.assign(m, -1);

  int si = 0;
  for (int i = 0; i < m; ++i) {
    for (auto& [v, c] : rows[i].t.a) {
      T.A[i][col_of[v]] = c;
      T.A[i][nv + col_of[v]] = -c;
    }
    Rat rhs = -rows[i].t.b;  // a·x (+ slack handling) = -b
    if (rows[i].rel == Rel::Geq) T.A[i][2 * nv + si++] = -1;  // a·x - s = -b
    if (rhs < 0) {
      for (int j = 0; j < n; ++j) T.A[i][j] = -T.A[i][j];
      rhs = -rhs;
    }
    T.rhs[i] = rhs;
    T.A[i][2 * nv + nslack + i] = 1;  // artificial
    T.basis[i] = 2 * nv + nslack + i;
  }

  // Phase 1: maximize -sum(artificials).
  std::vector<Rat> c1(n, Rat(0));
  for (int i = 0; i < m; ++i) c1[2 * nv + nslack + i] = -1;
  T.solve(c1);  // bounded by construction
  for (int i = 0; i < m; ++i)
    if (T.basis[i] >= 2 * nv + nslack && T.rhs[i] != 0) return {LpOutcome::Infeasible, 0, {}};
  // Drive leftover zero-valued artificials out of the basis when possible.
  for (int i = 0; i < m; ++i) {
    if (T.basis[i] < 2 * nv + nslack) continue;
    int col = -1;
    for (int j = 0; j < 2 * nv + nslack && col < 0; ++j)
      if (T.A[i][j] != 0) col = j;
    if (col >= 0) T.pivot(i, col);
  }

  // Phase 2: forbid artificials by zero cost and never letting them re-enter.
  std::vector<Rat> c2(n, Rat(0));
  for (auto& [v, c] : obj.a) {
    c2[col_of[v]] = c;
    c2[nv + col_of[v]] = -c;
  }
  // Blank artificial columns so they cannot re-enter.
  for (int i = 0; i < m; ++i)
    for (int j = 2 * nv + nslack; j < n; ++j)
      if (T.basis[i] != j) T.A[i][j] = 0;
  if (!T.solve(c2)) return {LpOutcome::Unbounded, 0, {}};

  LpOutcome out;
  out.status = LpOutcome::Optimal;
  std::vector<Rat> z(n, Rat(0));
  for (int i = 0; i < m; ++i) z[T.basis[i]] = T.rhs[i];
  for (auto& [v, col] : col_of) out.point[v] = z[col] - z[nv + col];
  out.value = obj.b;
  for (auto& [v, c] : obj.a) out.value += c * out.point[v];
  return out;
}

std::optional<std::map<int, Rat>> lp_point(const std::vector<LinCon>& rows) {
  bool any_strict = false;
  for (auto& r : rows)
    if (r.rel == Rel::Gt) any_strict = true;

  if (!any_strict) {
    LpOutcome o = lp_maximize(LinTerm{}, rows);
    if (o.status != LpOutcome::Optimal) return std::nullopt;
    // Fill variables that appear in rows but were optimized away as 0.
    return o.point;
  }

  // Shared margin t: replace a·x + b > 0 by a·x + b - t >= 0, maximize t <= 1.
  int tvar = -1;
  for (auto& r : rows)
    for (auto& [v, c] : r.t.a) tvar = std::max(tvar, v);
  ++tvar;
  std::vector<LinCon> rel;
  for (auto& r : rows) {
    LinCon c = r;
    if (c.rel == Rel::Gt) {
      c.t.a[tvar] = -1;
      c.rel = Rel::Geq;
    }
    rel.push_back(c);
  }
  LinCon cap;  // 1 - t >= 0
  cap.t.a[tvar] = -1;
  cap.t.b = 1;
  rel.push_back(cap);
  LinTerm obj;
  obj.a[tvar] = 1;
  LpOutcome o = lp_maximize(obj, rel);
  if (o.status != LpOutcome::Optimal || o.value <= 0) return std::nullopt;
  o.point.erase(tvar);
  return o.point;
}

bool lp_sat(const std::vector<LinCon>& rows) { return lp_point(rows).has_value(); }

}  // namespace irw
