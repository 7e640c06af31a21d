#include "irw/solve.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sys/wait.h>
#include <unistd.h>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace irw {

namespace {

using Clock = std::chrono::steady_clock;

std::set<int> atom_vars(const std::vector<Inequality>& atoms) {
  std::set<int> out;
  for (const auto& a : atoms)
    for (int v : a.lhs.vars()) out.insert(v);
  return out;
}

// Replace every variable of p that is not in `keep` by its current value.
Polynomial substitute_outside(const Polynomial& p, const std::set<int>& keep,
                              const std::map<int, Rat>& cur) {
  std::map<int, Polynomial> sub;
  for (int v : p.vars())
    if (!keep.count(v)) {
      auto it = cur.find(v);
      sub[v] = Polynomial(it == cur.end() ? Rat(0) : it->second);
    }
  return p.substitute(sub);
}

// First-order expansion of p around `cur`, restricted to the variables in
// `free` (everything else is treated as a constant at its current value):
// p(x) ~ p(x0) + sum_v dp/dv(x0) (x_v - x0_v).
LinTerm linearize_at(const Polynomial& p, const std::set<int>& free,
                     const std::map<int, Rat>& cur) {
  LinTerm t;
  t.b = p.eval(cur);
  for (const auto& [m, c] : p.terms())
    for (size_t k = 0; k < m.exps.size(); ++k) {
      auto [v, e] = m.exps[k];
      if (!free.count(v)) continue;
      // d(mono)/dv evaluated at cur.
      Rat g = c * e;
      for (size_t j = 0; j < m.exps.size(); ++j) {
        auto [w, f] = m.exps[j];
        int pw = j == k ? f - 1 : f;
        for (int i = 0; i < pw; ++i) g *= cur.at(w);
      }
      t.a[v] += g;
      t.b -= g * cur.at(v);
    }
  return t;
}

std::optional<LinTerm> lin_of(const Polynomial& p) {
  if (!is_affine(p)) return std::nullopt;
  LinTerm t;
  for (const auto& [m, c] : p.terms()) {
    if (m.exps.empty())
      t.b = c;
    else
      t.a[m.exps[0].first] = c;
  }
  return t;
}

double evald(const Polynomial& p, const std::map<int, double>& x) {
  double v = 0;
  for (const auto& [m, c] : p.terms()) {
    double t = c.get_d();
    for (const auto& [var, e] : m.exps)
      for (int i = 0; i < e; ++i) t *= x.at(var);
    v += t;
  }
  return v;
}

double atom_violation_d(const Inequality& a, double val, double margin) {
  switch (a.rel) {
    case Rel::Geq:
      return std::max(0.0, -val);
    case Rel::Gt:
    case Rel::Strong:
      return std::max(0.0, margin - val);
    case Rel::Eq:
      return std::fabs(val);
  }
  return 0;
}

double system_violation(const GlobalSystem& sys, const std::map<int, double>& x,
                        double margin) {
  double worst = 0;
  for (const auto& a : sys.shell)
    worst = std::max(worst, atom_violation_d(a, evald(a.lhs, x), margin));
  for (const auto& b : sys.blocks) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& alt : b.alternatives) {
      double w = 0;
      for (const auto& a : alt)
        w = std::max(w, atom_violation_d(a, evald(a.lhs, x), margin));
      best = std::min(best, w);
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

int GlobalSystem::constraint_count() const {
  int n = static_cast<int>(shell.size());
  for (const auto& b : blocks)
    for (const auto& alt : b.alternatives) n += static_cast<int>(alt.size());
  return n;
}

std::string Assignment::json(const VarTable& vt) const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [idx, val] : values)
    j[vt.name(VarId{idx})] = val.get_str();
  return j.dump(2);
}

GlobalSystem assemble(const std::vector<CaseSystem>& systems,
                      const InitConstraint& init, const TemplateSet& ts,
                      const AssembleOptions& opt) {
  GlobalSystem g;
  g.shell = init.atoms;
  g.shell.push_back(Inequality{
      Polynomial::var(ts.eps) - Polynomial(opt.eps_min), Rel::Geq});
  for (const auto& cs : systems) {
    DisjunctiveBlock b;
    for (const auto& blk : cs.cases) b.alternatives.push_back(blk.constraints);
    g.blocks.push_back(std::move(b));
    g.aux.insert(g.aux.end(), cs.fresh.begin(), cs.fresh.end());
  }
  g.primary = ts.unknowns;
  g.primary.insert(g.primary.end(), init.nu0.begin(), init.nu0.end());
  g.state = init.nu0;
  std::set<VarId> all(g.primary.begin(), g.primary.end());
  all.insert(g.aux.begin(), g.aux.end());
  for (const auto& a : g.shell)
    for (int v : a.lhs.vars()) all.insert(VarId{v});
  for (const auto& b : g.blocks)
    for (const auto& alt : b.alternatives)
      for (int v : atom_vars(alt)) all.insert(VarId{v});
  g.unknowns.assign(all.begin(), all.end());
  for (const auto& a : g.shell)
    g.max_degree = std::max(g.max_degree, a.lhs.total_degree());
  for (const auto& b : g.blocks)
    for (const auto& alt : b.alternatives)
      for (const auto& a : alt)
        g.max_degree = std::max(g.max_degree, a.lhs.total_degree());
  if (opt.maximize_eps) g.objective = Polynomial::var(ts.eps);
  return g;
}

bool satisfies(const GlobalSystem& sys, const std::map<int, Rat>& point) {
  auto all_hold = [&](const std::vector<Inequality>& atoms) {
    for (const auto& a : atoms)
      if (!a.holds(a.lhs.eval(point))) return false;
    return true;
  };
  if (!all_hold(sys.shell)) return false;
  for (const auto& b : sys.blocks) {
    bool some = false;
    for (const auto& alt : b.alternatives)
      if (all_hold(alt)) {
        some = true;
        break;
      }
    if (!some) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Degree/disjunction reduction.

namespace {

class Reducer {
 public:
  Reducer(VarTable& vt, GlobalSystem& out, EncodeCtx& ctx)
      : vt_(vt), out_(out), ctx_(ctx) {}

  // Fresh variable naming a binary product; the defining equality is emitted
  // into the shell once per distinct (memoized) pair.
  int product(int a, int b) {
    auto key = std::minmax(a, b);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    VarId v = ctx_.fresh("v");
    out_.shell.push_back(Inequality{
        Polynomial::var(v) -
            Polynomial::var(VarId{key.first}) * Polynomial::var(VarId{key.second}),
        Rel::Eq});
    fresh_.push_back(v);
    memo_[key] = v.idx;
    return v.idx;
  }

  // Collapse a factor list to one variable by balanced halving.
  int fold(const std::vector<int>& f, size_t lo, size_t hi) {
    if (hi - lo == 1) return f[lo];
    size_t mid = lo + (hi - lo + 1) / 2;
    return product(fold(f, lo, mid), fold(f, mid, hi));
  }

  // Rewrite p so every monomial has degree at most two.
  Polynomial reduce(const Polynomial& p) {
    Polynomial r;
    for (const auto& [m, c] : p.terms()) {
      if (m.total_degree() <= 2) {
        r.add_term(m, c);
        continue;
      }
      std::vector<int> f;
      for (const auto& [var, e] : m.exps)
        for (int i = 0; i < e; ++i) f.push_back(var);
      size_t mid = (f.size() + 1) / 2;
      int left = fold(f, 0, mid);
      int right = fold(f, mid, f.size());
      r.add_term(Monomial{{{left, 1}}} * Monomial{{{right, 1}}}, c);
    }
    return r;
  }

  const std::vector<VarId>& fresh() const { return fresh_; }

 private:
  VarTable& vt_;
  GlobalSystem& out_;
  EncodeCtx& ctx_;
  std::map<std::pair<int, int>, int> memo_;
  std::vector<VarId> fresh_;
};

}  // namespace

GlobalSystem reduce_to_qp(const GlobalSystem& sys, VarTable& vt) {
  GlobalSystem out;
  out.primary = sys.primary;
  out.state = sys.state;
  out.aux = sys.aux;
  EncodeCtx ctx(vt);
  Reducer red(vt, out, ctx);
  std::vector<VarId> extra;

  // Every inequality becomes an equality against a bounded slack variable.
  auto lower_atom_to_residual = [&](const Inequality& a) -> Polynomial {
    if (a.rel == Rel::Eq) return a.lhs;
    VarId q = ctx.fresh("q");
    extra.push_back(q);
    out.shell.push_back(Inequality{
        Polynomial::var(q), a.rel == Rel::Geq ? Rel::Geq : Rel::Gt});
    return a.lhs - Polynomial::var(q);
  };

  for (const auto& a : sys.shell)
    out.shell.push_back(Inequality{red.reduce(lower_atom_to_residual(a)),
                                   Rel::Eq});

  for (const auto& b : sys.blocks) {
    // Each alternative collapses to "its squared-residual sum is zero"; the
    // disjunction becomes a zero product of the per-alternative sums.
    std::vector<int> us;
    for (const auto& alt : b.alternatives) {
      Polynomial sum;
      for (const auto& a : alt) {
        Polynomial e = lower_atom_to_residual(a);
        sum = sum + e * e;
      }
      VarId u = ctx.fresh("u");
      extra.push_back(u);
      us.push_back(u.idx);
      out.shell.push_back(
          Inequality{red.reduce(Polynomial::var(u) - sum), Rel::Eq});
    }
    Polynomial prod;
    if (us.size() == 1) {
      prod = Polynomial::var(VarId{us[0]});
    } else {
      int cur = us[0];
      for (size_t i = 1; i + 1 < us.size(); ++i)
        cur = red.product(cur, us[i]);
      prod = Polynomial::var(VarId{cur}) * Polynomial::var(VarId{us.back()});
    }
    out.shell.push_back(Inequality{prod, Rel::Eq});
  }

  if (sys.objective) out.objective = red.reduce(*sys.objective);

  std::set<VarId> all(sys.unknowns.begin(), sys.unknowns.end());
  all.insert(extra.begin(), extra.end());
  all.insert(red.fresh().begin(), red.fresh().end());
  out.unknowns.assign(all.begin(), all.end());
  out.aux.insert(out.aux.end(), extra.begin(), extra.end());
  out.aux.insert(out.aux.end(), red.fresh().begin(), red.fresh().end());
  for (const auto& a : out.shell)
    out.max_degree = std::max(out.max_degree, a.lhs.total_degree());
  return out;
}

// ---------------------------------------------------------------------------
// SMT-LIB2 export.

namespace {

std::string smt_int(const mpz_class& z) {
  if (z >= 0) return z.get_str();
  return "(- " + mpz_class(-z).get_str() + ")";
}

std::string smt_rat(const Rat& r) {
  if (r.get_den() == 1) return smt_int(r.get_num());
  return "(/ " + smt_int(r.get_num()) + " " + r.get_den().get_str() + ")";
}

std::string smt_poly(const Polynomial& p, const VarTable& vt) {
  if (p.is_zero()) return "0";
  std::vector<std::string> terms;
  for (const auto& [m, c] : p.terms()) {
    if (m.exps.empty()) {
      terms.push_back(smt_rat(c));
      continue;
    }
    std::ostringstream t;
    t << "(* " << smt_rat(c);
    for (const auto& [var, e] : m.exps)
      for (int i = 0; i < e; ++i) t << ' ' << vt.name(VarId{var});
    t << ')';
    terms.push_back(t.str());
  }
  if (terms.size() == 1) return terms[0];
  std::ostringstream s;
  s << "(+";
  for (const auto& t : terms) s << ' ' << t;
  s << ')';
  return s.str();
}

std::string smt_atom(const Inequality& a, const VarTable& vt) {
  const char* op = a.rel == Rel::Eq ? "=" : (a.rel == Rel::Geq ? ">=" : ">");
  return std::string("(") + op + " " + smt_poly(a.lhs, vt) + " 0)";
}

std::string smt_conj(const std::vector<Inequality>& atoms, const VarTable& vt) {
  if (atoms.size() == 1) return smt_atom(atoms[0], vt);
  std::ostringstream s;
  s << "(and";
  for (const auto& a : atoms) s << ' ' << smt_atom(a, vt);
  s << ')';
  return s.str();
}

}  // namespace

std::string export_smtlib(const GlobalSystem& sys, const VarTable& vt) {
  std::ostringstream s;
  s << "(set-logic QF_NRA)\n";
  for (VarId v : sys.unknowns)
    s << "(declare-const " << vt.name(v) << " Real)\n";
  for (const auto& a : sys.shell) s << "(assert " << smt_atom(a, vt) << ")\n";
  for (const auto& b : sys.blocks) {
    if (b.alternatives.empty()) {
      s << "(assert false)\n";
      continue;
    }
    if (b.alternatives.size() == 1) {
      s << "(assert " << smt_conj(b.alternatives[0], vt) << ")\n";
      continue;
    }
    s << "(assert (or";
    for (const auto& alt : b.alternatives) s << ' ' << smt_conj(alt, vt);
    s << "))\n";
  }
  s << "(check-sat)\n(get-model)\n";
  return s.str();
}

// ---------------------------------------------------------------------------
// External-process backend.

namespace {

// Parse a model value: numeral, decimal, (- v), (/ a b).
std::optional<Rat> parse_smt_value(const std::string& text, size_t& pos) {
  auto skip = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  };
  skip();
  if (pos >= text.size()) return std::nullopt;
  if (text[pos] == '(') {
    ++pos;
    skip();
    if (pos >= text.size()) return std::nullopt;
    char op = text[pos];
    if (op != '-' && op != '/') return std::nullopt;
    ++pos;
    auto a = parse_smt_value(text, pos);
    if (!a) return std::nullopt;
    std::optional<Rat> r;
    if (op == '-') {
      r = -*a;
    } else {
      auto b = parse_smt_value(text, pos);
      if (!b || *b == 0) return std::nullopt;
      r = *a / *b;
    }
    skip();
    if (pos >= text.size() || text[pos] != ')') return std::nullopt;
    ++pos;
    return r;
  }
  size_t start = pos;
  while (pos < text.size() &&
         (std::isdigit(static_cast<unsigned char>(text[pos])) ||
          text[pos] == '.'))
    ++pos;
  if (pos == start) return std::nullopt;
  std::string num = text.substr(start, pos - start);
  auto dot = num.find('.');
  if (dot == std::string::npos) return Rat(mpz_class(num));
  std::string digits = num.substr(0, dot) + num.substr(dot + 1);
  if (digits.empty()) return std::nullopt;
  mpz_class den = 1;
  for (size_t i = dot + 1; i < num.size(); ++i) den *= 10;
  Rat r(mpz_class(digits), den);
  r.canonicalize();
  return r;
}

}  // namespace

SolveResult external_solve(const GlobalSystem& sys, const VarTable& vt,
                           const std::string& command,
                           double timeout_seconds) {
  static int counter = 0;
  std::string path = "/tmp/irw_query_" + std::to_string(::getpid()) + "_" +
                     std::to_string(counter++) + ".smt2";
  {
    std::ofstream f(path);
    f << export_smtlib(sys, vt);
  }
  std::string cmd = command;
  auto slot = cmd.find("{file}");
  if (slot != std::string::npos)
    cmd = cmd.substr(0, slot) + path + cmd.substr(slot + 6);
  else
    cmd += " " + path;
  std::ostringstream full;
  full << "timeout " << std::max(1, static_cast<int>(timeout_seconds)) << " "
       << cmd << " 2>/dev/null";
  FILE* pipe = ::popen(full.str().c_str(), "r");
  if (!pipe) {
    std::remove(path.c_str());
    return {SolveStatus::Unknown, {}, "backend launch failure"};
  }
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = ::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  int rc = ::pclose(pipe);
  std::remove(path.c_str());
  if (WIFEXITED(rc) && WEXITSTATUS(rc) == 124)
    return {SolveStatus::Unknown, {}, "backend timeout"};

  std::istringstream lines(out);
  std::string line, verdict;
  while (std::getline(lines, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
      line.pop_back();
    if (line == "sat" || line == "unsat" || line == "unknown") {
      verdict = line;
      break;
    }
  }
  if (verdict == "unsat") return {SolveStatus::Unsat, {}, "backend unsat"};
  if (verdict == "unknown") return {SolveStatus::Unknown, {}, "backend unknown"};
  if (verdict != "sat")
    return {SolveStatus::Unknown, {}, "malformed solver output"};

  Assignment asg;
  for (VarId v : sys.unknowns) asg.values[v.idx] = Rat(0);
  const std::string key = "(define-fun ";
  size_t pos = 0;
  while ((pos = out.find(key, pos)) != std::string::npos) {
    pos += key.size();
    size_t e = pos;
    while (e < out.size() && !std::isspace(static_cast<unsigned char>(out[e])))
      ++e;
    std::string name = out.substr(pos, e - pos);
    size_t real = out.find("Real", e);
    if (real == std::string::npos)
      return {SolveStatus::Unknown, {}, "malformed solver model"};
    size_t vp = real + 4;
    auto val = parse_smt_value(out, vp);
    if (!val) return {SolveStatus::Unknown, {}, "malformed solver model"};
    if (auto id = vt.find(name)) asg.values[id->idx] = *val;
    pos = vp;
  }
  return {SolveStatus::Sat, asg, "external backend"};
}

// ---------------------------------------------------------------------------
// Embedded hybrid backend.

namespace {

// Minimize the worst violation t of `atoms` over the variables in `free`,
// everything else pinned to `cur`.  Returns (t*, point over free∪) or
// nullopt when some atom is nonlinear in the free variables.
struct ViolationLp {
  Rat t;
  std::map<int, Rat> point;
};

thread_local int g_vlp_debug = 0;

// Double-precision two-phase dense simplex mirroring the exact one.  The
// search steps only steer the iterate (all commits are rationalized and the
// final answer is certified exactly), so floating point is fine there and
// orders of magnitude faster than exact rationals on wide tableaus.
struct DLpOutcome {
  enum Status { Optimal, Infeasible, Unbounded } status = Infeasible;
  double value = 0;
  std::map<int, double> point;
};

DLpOutcome dlp_maximize(const LinTerm& obj, const std::vector<LinCon>& rows) {
  constexpr double kEps = 1e-9;
  std::map<int, int> col_of;
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
  int nslack = 0;
  for (auto& r : rows)
    if (r.rel == Rel::Geq) ++nslack;
  int n = 2 * nv + nslack + m;
  std::vector<std::vector<double>> A(m, std::vector<double>(n, 0.0));
  std::vector<double> rhs(m, 0.0);
  std::vector<int> basis(m, -1);

  int si = 0;
  // Tiny random relaxation of every inequality right-hand side: degenerate
  // vertices (many ties in the ratio test) otherwise trap Dantzig pricing in
  // thousands of zero-progress pivots.  The perturbation is far below the
  // tolerances anything downstream cares about.
  std::minstd_rand prng(0x9e3779b9u);
  for (int i = 0; i < m; ++i) {
    for (auto& [v, c] : rows[i].t.a) {
      double cd = c.get_d();
      A[i][col_of[v]] = cd;
      A[i][nv + col_of[v]] = -cd;
    }
    double b = -rows[i].t.b.get_d();
    if (rows[i].rel == Rel::Geq) {
      A[i][2 * nv + si++] = -1;
      b -= 1e-7 * (1.0 + static_cast<double>(prng() % 1024) / 1024.0);
    }
    if (b < 0) {
      for (int j = 0; j < n; ++j) A[i][j] = -A[i][j];
      b = -b;
    }
    rhs[i] = b;
    A[i][2 * nv + nslack + i] = 1;
    basis[i] = 2 * nv + nslack + i;
  }

  auto pivot = [&](int r, int col) {
    double p = A[r][col];
    for (int j = 0; j < n; ++j) A[r][j] /= p;
    rhs[r] /= p;
    for (int i = 0; i < m; ++i) {
      if (i == r || A[i][col] == 0) continue;
      double f = A[i][col];
      for (int j = 0; j < n; ++j) A[i][j] -= f * A[r][j];
      rhs[i] -= f * rhs[r];
    }
    basis[r] = col;
  };
  // Dantzig pricing over an incrementally maintained reduced-cost row, with
  // an iteration cap instead of anti-cycling; on cap we simply stop at the
  // current (feasible) basis.
  auto simplex = [&](const std::vector<double>& c) {
    std::vector<double> red(n, 0.0);
    auto refresh = [&] {
      std::vector<double> dual(m);
      for (int i = 0; i < m; ++i) dual[i] = c[basis[i]];
      for (int j = 0; j < n; ++j) {
        double cb = c[j];
        for (int i = 0; i < m; ++i)
          if (A[i][j] != 0) cb -= dual[i] * A[i][j];
        red[j] = cb;
      }
    };
    refresh();
    for (long it = 0; it < 20000; ++it) {
      if (it && it % 512 == 0) refresh();
      int enter = -1;
      double entc = kEps;
      for (int j = 0; j < n; ++j)
        if (red[j] > entc) {
          enter = j;
          entc = red[j];
        }
      if (enter < 0) return true;
      int leave = -1;
      double best = 0;
      for (int i = 0; i < m; ++i) {
        if (A[i][enter] <= kEps) continue;
        double ratio = rhs[i] / A[i][enter];
        if (leave < 0 || ratio < best ||
            (ratio == best && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      double rc = red[enter];
      pivot(leave, enter);
      for (int j = 0; j < n; ++j) red[j] -= rc * A[leave][j];
      red[enter] = 0;
    }
    return true;
  };

  std::vector<double> c1(n, 0.0);
  for (int i = 0; i < m; ++i) c1[2 * nv + nslack + i] = -1;
  simplex(c1);
  for (int i = 0; i < m; ++i)
    if (basis[i] >= 2 * nv + nslack && rhs[i] > 1e-6)
      return {DLpOutcome::Infeasible, 0, {}};
  for (int i = 0; i < m; ++i) {
    if (basis[i] < 2 * nv + nslack) continue;
    int col = -1;
    for (int j = 0; j < 2 * nv + nslack && col < 0; ++j)
      if (std::abs(A[i][j]) > kEps) col = j;
    if (col >= 0) pivot(i, col);
  }

  std::vector<double> c2(n, 0.0);
  for (auto& [v, c] : obj.a) {
    double cd = c.get_d();
    c2[col_of[v]] = cd;
    c2[nv + col_of[v]] = -cd;
  }
  for (int i = 0; i < m; ++i)
    for (int j = 2 * nv + nslack; j < n; ++j)
      if (basis[i] != j) A[i][j] = 0;
  if (!simplex(c2)) return {DLpOutcome::Unbounded, 0, {}};

  DLpOutcome out;
  out.status = DLpOutcome::Optimal;
  std::vector<double> z(n, 0.0);
  for (int i = 0; i < m; ++i) z[basis[i]] = rhs[i];
  for (auto& [v, col] : col_of) out.point[v] = z[col] - z[nv + col];
  out.value = obj.b.get_d();
  for (auto& [v, c] : obj.a) out.value += c.get_d() * out.point[v];
  return out;
}

std::optional<ViolationLp> violation_lp(const std::vector<Inequality>& atoms,
                                        const std::set<int>& free,
                                        const std::map<int, Rat>& cur,
                                        const Rat& strict_margin, int t_idx,
                                        const Rat& box, unsigned wseed = 0,
                                        const std::vector<int>* groups
                                        = nullptr) {
  // One violation variable per atom, L1 objective: minimizing the sum keeps
  // descent pressure on every row instead of only the worst one.
  std::vector<LinCon> rows;
  // Hard box on the free variables: keeps near-degenerate blocks (which
  // would need unbounded multipliers) visibly violated so the outer loop
  // steers into the robust interior instead of onto a feasibility boundary.
  if (box > 0)
    for (int v : free) {
      LinCon lo, hi;
      lo.t.a[v] = 1;
      lo.t.b = box;  // v >= -box
      hi.t.a[v] = -1;
      hi.t.b = box;  // v <= box
      rows.push_back(lo);
      rows.push_back(hi);
    }
  // One violation variable per atom by default; with `groups`, atoms sharing
  // a label share one variable (its optimum is the group's worst violation),
  // which keeps the column count down for large row sets.
  int next_t = t_idx;
  for (size_t i = 0; i < atoms.size(); ++i) {
    const auto& a = atoms[i];
    Polynomial p = substitute_outside(a.lhs, free, cur);
    auto lt = lin_of(p);
    if (!lt) return std::nullopt;
    int tr = groups ? t_idx + (*groups)[i] : next_t;
    if (tr >= next_t) {
      next_t = tr + 1;
      LinCon tpos;
      tpos.t.a[tr] = 1;
      rows.push_back(tpos);  // t_r >= 0
    }
    auto relaxed = [&](Rat sign, Rat shift) {
      LinCon c;
      c.t = *lt;
      if (sign < 0) {
        for (auto& [v, coef] : c.t.a) coef = -coef;
        c.t.b = -c.t.b;
      }
      c.t.a[tr] += 1;
      c.t.b -= shift;
      rows.push_back(c);
    };
    switch (a.rel) {
      case Rel::Geq:
        relaxed(1, 0);
        break;
      case Rel::Gt:
      case Rel::Strong:
        // A strict row with zero offset ("y1 + ... + yk > 0") is
        // scale-degenerate: the all-zero point satisfies every homogeneous
        // companion row and leaves only this one violated by the margin,
        // giving the coefficient step nothing to push against.  Normalize to
        // the hard row lhs >= 1 instead (any strictly positive solution of a
        // homogeneous block rescales to one with lhs = 1; if the block is
        // not actually homogeneous the LP may come back infeasible and the
        // caller simply skips this alternative).
        // A strict row with no free variables is decided outright: charging
        // the margin as a tiny violation would make a vacuous alternative
        // (e.g. "0 > 0") outscore genuine ones and hide the real residual.
        if (lt->a.empty()) {
          if (lt->b > 0) continue;
          return std::nullopt;
        }
        if (lt->b == 0) {
          LinCon c;
          c.t = *lt;
          c.t.b = -1;  // lhs - 1 >= 0
          rows.push_back(c);
        } else {
          relaxed(1, strict_margin);
        }
        break;
      case Rel::Eq:
        relaxed(1, 0);
        relaxed(-1, 0);
        break;
    }
  }
  // Randomizing the L1 weights (when requested) picks a different optimal
  // vertex each call, which helps the outer alternation wiggle out of
  // degenerate fixpoints without losing the "zero iff feasible" property.
  std::minstd_rand wrng(wseed);
  LinTerm obj;
  for (const auto& row : rows)
    for (const auto& [v, c] : row.t.a)
      if (v >= t_idx && !obj.a.count(v))
        obj.a[v] =
            wseed ? Rat(-(1 + static_cast<long>(wrng() % 16)), 8) : Rat(-1);
  auto r = dlp_maximize(obj, rows);
  if (r.status != DLpOutcome::Optimal) return std::nullopt;
  ViolationLp out;
  out.t = 0;
  for (auto it = r.point.begin(); it != r.point.end();) {
    if (it->first >= t_idx) {
      double tv = std::max(0.0, it->second);
      out.t = std::max(out.t, rationalize(tv, 1UL << 40));
      if (g_vlp_debug && tv > 0)
        std::fprintf(stderr, "      row %d t=%g\n", it->first - t_idx, tv);
      it = r.point.erase(it);
    } else {
      ++it;
    }
  }
  for (const auto& [v, val] : r.point) out.point[v] = rationalize(val, 1UL << 40);
  return out;
}

// Local descent on the sum of squared violations of `atoms` over `free`.
void numeric_descent(const std::vector<Inequality>& atoms,
                     const std::vector<int>& free, std::map<int, Rat>& cur,
                     double margin, int steps, std::mt19937& rng) {
  std::map<int, double> x;
  std::set<int> vars;
  for (const auto& a : atoms)
    for (int v : a.lhs.vars()) vars.insert(v);
  for (int v : vars) x[v] = cur.count(v) ? cur.at(v).get_d() : 0.0;
  std::set<int> fs(free.begin(), free.end());

  std::map<int, double> m1, m2;
  const double lr = 0.05, b1 = 0.9, b2 = 0.999;
  for (int step = 1; step <= steps; ++step) {
    std::map<int, double> grad;
    for (int v : free) grad[v] = 0;
    for (const auto& a : atoms) {
      double val = evald(a.lhs, x);
      double d = 0;
      switch (a.rel) {
        case Rel::Geq:
          d = val < 0 ? 2 * val : 0;
          break;
        case Rel::Gt:
        case Rel::Strong:
          d = val < margin ? 2 * (val - margin) : 0;
          break;
        case Rel::Eq:
          d = 2 * val;
          break;
      }
      if (d == 0) continue;
      for (const auto& [mono, c] : a.lhs.terms())
        for (const auto& [var, e] : mono.exps) {
          if (!fs.count(var)) continue;
          double partial = c.get_d() * e;
          for (const auto& [var2, e2] : mono.exps) {
            int ee = e2 - (var2 == var ? 1 : 0);
            for (int i = 0; i < ee; ++i) partial *= x.at(var2);
          }
          grad[var] += d * partial;
        }
    }
    for (int v : free) {
      m1[v] = b1 * m1[v] + (1 - b1) * grad[v];
      m2[v] = b2 * m2[v] + (1 - b2) * grad[v] * grad[v];
      double mh = m1[v] / (1 - std::pow(b1, step));
      double vh = m2[v] / (1 - std::pow(b2, step));
      x[v] -= lr * mh / (std::sqrt(vh) + 1e-10);
    }
  }
  (void)rng;
  for (int v : free) cur[v] = rationalize(x[v], 1000000000UL);
}

}  // namespace

SolveResult embedded_solve(const GlobalSystem& sys, const VarTable& vt,
                           const EmbeddedOptions& opt) {
  auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                     std::chrono::duration<double>(
                                         opt.wall_seconds));
  const double margin_d = opt.strict_margin.get_d();
  const Rat search_margin = std::max(opt.strict_margin, Rat(1, 10000));
  const int t_idx = vt.size() + 1000000;  // synthetic LP-only index

  std::set<int> primary(
      [&] {
        std::set<int> s;
        for (VarId v : sys.primary) s.insert(v.idx);
        return s;
      }());
  std::set<int> auxset;
  for (VarId v : sys.aux) auxset.insert(v.idx);
  // Per-block local multiplier variables.
  std::vector<std::set<int>> block_aux;
  for (const auto& b : sys.blocks) {
    std::set<int> local;
    for (const auto& alt : b.alternatives)
      for (int v : atom_vars(alt))
        if (auxset.count(v)) local.insert(v);
    block_aux.push_back(std::move(local));
  }
  std::set<int> universe;
  for (VarId v : sys.unknowns) universe.insert(v.idx);
  for (const auto& a : sys.shell)
    for (int v : a.lhs.vars()) universe.insert(v);
  for (const auto& b : sys.blocks)
    for (const auto& alt : b.alternatives)
      for (int v : atom_vars(alt)) universe.insert(v);
  if (primary.empty())
    for (int v : universe)
      if (!auxset.count(v)) primary.insert(v);
  std::set<int> stateset;
  for (VarId v : sys.state) stateset.insert(v.idx);
  std::set<int> core = primary;
  for (int v : stateset) core.erase(v);

  // Per block, the primary variables that occur only linearly and never in a
  // product with a local multiplier (typically the conclusion's template
  // coefficients).  Freeing them while scoring an alternative keeps the LP
  // affine and lets a block anticipate how the primary step could adapt,
  // instead of judging every alternative against frozen coefficients.
  std::vector<std::set<int>> lin_extra(sys.blocks.size());
  for (size_t bi = 0; bi < sys.blocks.size(); ++bi) {
    std::set<int> cand, banned;
    for (const auto& alt : sys.blocks[bi].alternatives)
      for (const auto& a : alt)
        for (const auto& [mono, coef] : a.lhs.terms()) {
          bool has_aux = false;
          std::vector<int> prim;
          for (const auto& [v, e] : mono.exps) {
            if (block_aux[bi].count(v)) has_aux = true;
            if (primary.count(v)) prim.push_back(e > 1 ? -1 : v);
          }
          for (int v : prim) {
            if (v < 0) continue;
            if (has_aux || prim.size() >= 2)
              banned.insert(v);
            else
              cand.insert(v);
          }
          for (const auto& [v, e] : mono.exps)
            if (e > 1 && primary.count(v)) banned.insert(v);
        }
    for (int v : cand)
      if (!banned.count(v)) lin_extra[bi].insert(v);
  }

  // Exact worst residual of a conjunction at a fully assigned point.
  auto atoms_residual = [](const std::vector<Inequality>& atoms,
                           const std::map<int, Rat>& point,
                           const Rat& margin) {
    Rat worst(0);
    for (const auto& a : atoms) {
      Rat val = a.lhs.eval(point);
      Rat v(0);
      switch (a.rel) {
        case Rel::Geq:
          v = val < 0 ? -val : Rat(0);
          break;
        case Rel::Gt:
        case Rel::Strong:
          v = val < margin ? margin - val : Rat(0);
          break;
        case Rel::Eq:
          v = abs(val);
          break;
      }
      worst = std::max(worst, v);
    }
    return worst;
  };

  // Sequential linear programming over coefficients and multipliers jointly.
  // Coordinate alternation has bilinear fixpoints where neither group can
  // move alone; linearizing the products around the current point and
  // solving one min-max LP over everything inside a trust region finds the
  // joint descent direction those fixpoints are blind to.  Candidate steps
  // are accepted only if the true (exact) violation decreases.
  auto slp_polish = [&](std::map<int, Rat>& cur, const std::vector<int>& chosen,
                        const std::vector<Rat>& block_viol,
                        const Rat& search_margin) {
    std::set<int> free = primary;
    // Only the worst offenders join the joint step; everything else is
    // handled by the acceptance check below.  Keeping the hot set small
    // keeps the LP tractable.
    std::vector<char> hot(sys.blocks.size(), 0);
    {
      std::vector<size_t> by_viol;
      for (size_t bi = 0; bi < sys.blocks.size(); ++bi)
        if (block_viol[bi] > 0) by_viol.push_back(bi);
      std::stable_sort(by_viol.begin(), by_viol.end(),
                       [&](size_t a, size_t b) {
                         return block_viol[a] > block_viol[b];
                       });
      if (by_viol.size() > 16) by_viol.resize(16);
      for (size_t bi : by_viol) {
        hot[bi] = 1;
        free.insert(block_aux[bi].begin(), block_aux[bi].end());
      }
    }
    // Violation of a candidate: blocks whose multipliers the step does not
    // touch get to re-derive them (the next multiplier step would anyway),
    // so a small coefficient move is not charged for stale multipliers.
    auto full_viol = [&](const std::map<int, Rat>& pt) {
      Rat w = atoms_residual(sys.shell, pt, search_margin);
      for (size_t bi = 0; bi < sys.blocks.size(); ++bi) {
        if (sys.blocks[bi].alternatives.empty()) continue;
        const auto& alt = sys.blocks[bi].alternatives[chosen[bi]];
        if (hot[bi]) {
          w = std::max(w, atoms_residual(alt, pt, search_margin));
        } else {
          auto r = violation_lp(alt, block_aux[bi], pt, search_margin, t_idx,
                                Rat(10000));
          w = std::max(w, r ? r->t : atoms_residual(alt, pt, search_margin));
        }
      }
      return w;
    };
    const int t_idx_local = t_idx;
    Rat best = full_viol(cur);
    double radius = 0.5;
    for (int it = 0; it < 8 && radius > 1e-7; ++it) {
      std::vector<LinCon> rows;
      bool broken = false;
      LinCon tpos;
      tpos.t.a[t_idx_local] = 1;
      rows.push_back(tpos);
      auto add_atom = [&](const Inequality& a) {
        LinTerm lt = linearize_at(a.lhs, free, cur);
        auto relaxed = [&](Rat sign, const Rat& shift) {
          LinCon c;
          c.t = lt;
          if (sign < 0) {
            for (auto& [v, coef] : c.t.a) coef = -coef;
            c.t.b = -c.t.b;
          }
          c.t.a[t_idx_local] += 1;
          c.t.b -= shift;
          rows.push_back(c);
        };
        switch (a.rel) {
          case Rel::Geq:
            relaxed(1, Rat(0));
            break;
          case Rel::Gt:
          case Rel::Strong:
            if (lt.a.empty()) {
              if (!(lt.b > 0)) broken = true;
            } else if (lt.b == 0) {
              LinCon c;
              c.t = lt;
              c.t.b = -1;
              rows.push_back(c);
            } else {
              relaxed(1, search_margin);
            }
            break;
          case Rel::Eq:
            relaxed(1, Rat(0));
            relaxed(-1, Rat(0));
            break;
        }
      };
      for (const auto& a : sys.shell) add_atom(a);
      for (size_t bi = 0; bi < sys.blocks.size(); ++bi)
        if (hot[bi] && !sys.blocks[bi].alternatives.empty())
          for (const auto& a : sys.blocks[bi].alternatives[chosen[bi]])
            add_atom(a);
      if (broken) break;
      for (int v : free) {
        double scale = std::max(1.0, std::fabs(cur.at(v).get_d()));
        Rat r = rationalize(radius * scale, 1UL << 40);
        LinCon lo, hi;
        lo.t.a[v] = 1;
        lo.t.b = r - cur.at(v);  // v >= cur - r
        hi.t.a[v] = -1;
        hi.t.b = r + cur.at(v);  // v <= cur + r
        rows.push_back(lo);
        rows.push_back(hi);
      }
      LinTerm obj;
      obj.a[t_idx_local] = -1;
      auto r = dlp_maximize(obj, rows);
      if (r.status != DLpOutcome::Optimal) {
        radius /= 4;
        continue;
      }
      std::map<int, Rat> cand = cur;
      for (int v : free) {
        auto it2 = r.point.find(v);
        if (it2 != r.point.end()) cand[v] = rationalize(it2->second, 1UL << 40);
      }
      Rat got = full_viol(cand);
      // Classic ratio test: grow the region only when the true decrease is a
      // decent fraction of what the linearization promised.  The bilinear
      // curvature scales with the multiplier magnitudes, so at a fresh
      // plateau the radius usually has to contract a few times before the
      // model is trustworthy; accepting microscopic gains at a huge radius
      // just burns iterations.
      double predicted = best.get_d() - std::max(0.0, -r.value);
      double actual = best.get_d() - got.get_d();
      if (got < best) {
        cur = std::move(cand);
        best = got;
        if (best == 0) break;
      }
      if (predicted > 0 && actual >= 0.25 * predicted)
        radius = std::min(radius * 2, 4.0);
      else
        radius /= 4;
    }
  };

  double best_violation = std::numeric_limits<double>::infinity();
  std::map<int, Rat> best_point;
  const std::array<int, 4> scales{1, 2, 5, 12};

  auto round_rat = [](const Rat& r, long den) {
    Rat t = r * Rat(den) + Rat(1, 2);
    mpz_class fl;
    mpz_fdiv_q(fl.get_mpz_t(), t.get_num().get_mpz_t(),
               t.get_den().get_mpz_t());
    Rat out(fl, den);
    out.canonicalize();
    return out;
  };

  // Snap the primary variables to nearby small-denominator rationals and
  // re-derive exact multipliers per block by LP feasibility.
  auto try_exact = [&](const std::map<int, Rat>& base)
      -> std::optional<std::pair<std::map<int, Rat>, std::vector<int>>> {
    static const long dens[] = {1,  2,  3,  4,  5,   6,    8,      10,
                                12, 16, 24, 32, 64,  100,  1000,   100000,
                                1L << 20, 1L << 40};
    for (long den : dens) {
      std::map<int, Rat> cand = base;
      for (int v : primary)
        if (base.count(v)) cand[v] = round_rat(base.at(v), den);
      // Re-derive the initial-state variables exactly: with the coefficients
      // pinned, the shell is affine in them.
      if (!stateset.empty()) {
        std::vector<LinCon> rows;
        bool affine = true;
        for (const auto& a : sys.shell) {
          Polynomial p = substitute_outside(a.lhs, stateset, cand);
          if (!is_affine(p)) {
            affine = false;
            break;
          }
          rows.push_back(to_lincon(Inequality{p, a.rel}));
        }
        if (affine) {
          if (auto pt = lp_point(rows)) {
            for (int v : stateset)
              if (pt->count(v)) cand[v] = pt->at(v);
          } else {
            continue;
          }
        }
      }
      bool ok = true;
      for (const auto& a : sys.shell)
        if (!a.holds(a.lhs.eval(cand))) {
          ok = false;
          break;
        }
      if (!ok) continue;
      std::vector<int> chosen(sys.blocks.size(), 0);
      for (size_t bi = 0; ok && bi < sys.blocks.size(); ++bi) {
        bool found = false;
        const auto& b = sys.blocks[bi];
        for (size_t ai = 0; ai < b.alternatives.size() && !found; ++ai) {
          std::vector<LinCon> rows;
          bool affine = true;
          for (const auto& a : b.alternatives[ai]) {
            Polynomial p = substitute_outside(a.lhs, block_aux[bi], cand);
            if (!is_affine(p)) {
              affine = false;
              break;
            }
            rows.push_back(to_lincon(Inequality{p, a.rel}));
          }
          if (!affine) continue;
          if (auto pt = lp_point(rows)) {
            for (int v : block_aux[bi])
              cand[v] = pt->count(v) ? pt->at(v) : Rat(0);
            chosen[bi] = static_cast<int>(ai);
            found = true;
          }
        }
        if (!found) {
          ok = false;
          if (std::getenv("IRW_EMBED_DEBUG"))
            std::fprintf(stderr, "  try_exact den=%ld block %zu infeasible\n",
                         den, bi);
        }
      }
      if (ok && satisfies(sys, cand)) return std::make_pair(cand, chosen);
      if (ok && std::getenv("IRW_EMBED_DEBUG"))
        std::fprintf(stderr, "  try_exact den=%ld final check failed\n", den);
    }
    return std::nullopt;
  };

  auto finish_sat = [&](std::map<int, Rat> cur,
                        const std::vector<int>& chosen) -> SolveResult {
    // Optional objective polish over the primary variables along the chosen
    // alternatives, keeping every active constraint hard.
    if (sys.objective && sys.blocks.size() <= 24) {
      std::vector<Inequality> active = sys.shell;
      for (size_t i = 0; i < sys.blocks.size(); ++i)
        for (const auto& a : sys.blocks[i].alternatives[chosen[i]])
          active.push_back(a);
      std::set<int> core = [&] {
        std::set<int> s;
        for (VarId v : sys.primary) s.insert(v.idx);
        for (VarId v : sys.state) s.erase(v.idx);
        if (s.empty())
          for (VarId v : sys.unknowns) s.insert(v.idx);
        return s;
      }();
      std::vector<LinCon> rows;
      bool ok = true;
      for (const auto& a : active) {
        Polynomial p = substitute_outside(a.lhs, core, cur);
        auto lt = lin_of(p);
        if (!lt) {
          ok = false;
          break;
        }
        LinCon c;
        c.t = *lt;
        c.rel = a.rel == Rel::Eq ? Rel::Eq : Rel::Geq;
        if (a.rel == Rel::Gt || a.rel == Rel::Strong)
          c.t.b -= opt.strict_margin;
        rows.push_back(c);
      }
      Polynomial po = substitute_outside(*sys.objective, core, cur);
      auto obj = lin_of(po);
      if (ok && obj) {
        auto r = lp_maximize(*obj, rows);
        if (r.status == LpOutcome::Optimal) {
          std::map<int, Rat> cand = cur;
          for (int v : core)
            cand[v] = r.point.count(v) ? r.point.at(v) : Rat(0);
          if (satisfies(sys, cand)) cur = cand;
        }
      }
    }
    Assignment asg;
    for (int v : universe) asg.values[v] = cur.count(v) ? cur.at(v) : Rat(0);
    return {SolveStatus::Sat, asg, "embedded backend (exact)"};
  };

  // The wall clock, not the restart count, is the real budget: restarts are
  // cheap once the plateau detector below cuts losses, and distinct basins
  // are the main source of progress on nonconvex instances.
  int max_restarts =
      opt.wall_seconds > 0 ? std::max(opt.restarts, 512) : opt.restarts;
  for (int restart = 0; restart < max_restarts; ++restart) {
    if (Clock::now() > deadline) break;
    std::mt19937 rng(opt.seed + 7919u * static_cast<unsigned>(restart));
    int scale = scales[restart % scales.size()];
    std::uniform_int_distribution<int> ini(-scale, scale);
    std::map<int, Rat> cur;
    for (int v : universe) cur[v] = Rat(0);
    for (int v : primary) cur[v] = Rat(ini(rng));
    // Basin hopping: every other restart perturbs the best point seen so
    // far instead of starting cold.
    if (restart % 2 == 1 &&
        best_violation < std::numeric_limits<double>::infinity()) {
      std::uniform_int_distribution<int> hop(-2 * scale, 2 * scale);
      cur = best_point;
      for (int v : primary) cur[v] += Rat(hop(rng), 4);
    }

    double prev = std::numeric_limits<double>::infinity();
    int stalled = 0;
    std::vector<int> chosen(sys.blocks.size(), 0);
    std::vector<Rat> block_viol(sys.blocks.size(), Rat(0));
    for (int iter = 0; iter < opt.iterations; ++iter) {
      if (Clock::now() > deadline) break;
      auto ph0 = Clock::now();
      // Multiplier step: per block, pick the alternative with the smallest
      // achievable violation and install its exact LP point.
      for (size_t bi = 0; bi < sys.blocks.size(); ++bi) {
        const auto& b = sys.blocks[bi];
        std::optional<Rat> best_t;
        Rat best_true;
        int best_alt = 0;
        std::map<int, Rat> best_aux;
        static const int dbgblk =
            std::getenv("IRW_EMBED_DEBUG_BLOCK")
                ? atoi(std::getenv("IRW_EMBED_DEBUG_BLOCK"))
                : -1;
        std::set<int> score_free = block_aux[bi];
        score_free.insert(lin_extra[bi].begin(), lin_extra[bi].end());
        for (size_t ai = 0; ai < b.alternatives.size(); ++ai) {
          g_vlp_debug = (dbgblk == static_cast<int>(bi) && iter >= 3);
          if (g_vlp_debug) {
            std::fprintf(stderr, "    blk %zu alt %zu iter %d:\n", bi, ai,
                         iter);
            for (const auto& at : b.alternatives[ai]) {
              Polynomial sp = substitute_outside(at.lhs, score_free, cur);
              std::fprintf(stderr, "      atom %s rel=%d\n",
                           sp.str(vt).c_str(), static_cast<int>(at.rel));
            }
          }
          auto r = violation_lp(b.alternatives[ai], block_aux[bi], cur,
                                search_margin, t_idx, Rat(10000));
          g_vlp_debug = 0;
          if (!r) continue;
          // Hysteresis: a different case split has to beat the current one
          // by a clear margin, otherwise blocks flap between alternatives
          // and the iterate never settles.
          Rat eff = static_cast<int>(ai) == chosen[bi] ? r->t * Rat(3, 4)
                                                       : r->t;
          if (!best_t || eff < *best_t) {
            best_t = eff;
            best_true = r->t;
            best_alt = static_cast<int>(ai);
            best_aux = r->point;
          }
        }
        chosen[bi] = best_alt;
        block_viol[bi] = best_t ? best_true : Rat(0);
        // Cap coefficient bit growth: LP vertices of iterated exact steps
        // otherwise snowball into huge rationals.
        if (best_t)
          for (int v : block_aux[bi])
            cur[v] = best_aux.count(v)
                         ? rationalize(best_aux.at(v).get_d(), 1UL << 40)
                         : Rat(0);
        (void)score_free;
      }

      // Global violation with the multipliers freshly optimal: max of the
      // shell residuals (primary only) and the per-block LP values.
      Rat exact_viol(0);
      for (const auto& a : sys.shell) {
        Rat val = a.lhs.eval(cur);
        Rat v(0);
        switch (a.rel) {
          case Rel::Geq:
            v = val < 0 ? -val : Rat(0);
            break;
          case Rel::Gt:
          case Rel::Strong:
            v = val < opt.strict_margin ? opt.strict_margin - val : Rat(0);
            break;
          case Rel::Eq:
            v = abs(val);
            break;
        }
        if (v > exact_viol && std::getenv("IRW_EMBED_DEBUG"))
          std::fprintf(stderr, "    shell worst %s rel=%d resid=%g\n",
                       a.lhs.str(vt).c_str(), static_cast<int>(a.rel),
                       v.get_d());
        exact_viol = std::max(exact_viol, v);
      }
      for (const Rat& v : block_viol) exact_viol = std::max(exact_viol, v);
      if (std::getenv("IRW_EMBED_DEBUG")) {
        std::fprintf(stderr, "embed restart=%d iter=%d b-step done viol=%g\n",
                     restart, iter, exact_viol.get_d());
        for (size_t bi = 0; bi < block_viol.size(); ++bi)
          if (block_viol[bi] > 0)
            std::fprintf(stderr, "    worst block %zu alt=%d t=%g\n", bi,
                         chosen[bi], block_viol[bi].get_d());
      }
      if (exact_viol == 0 && satisfies(sys, cur))
        return finish_sat(cur, chosen);
      double viol_now = exact_viol.get_d();
      if (std::getenv("IRW_EMBED_PROF"))
        std::fprintf(stderr, "  prof iter=%d b-step %.2fs\n", iter,
                     std::chrono::duration<double>(Clock::now() - ph0).count());
      auto ph1 = Clock::now();
      (void)ph1;

      // Greedy per-block alternative selection can trap the alternation: a
      // block may score lowest on an alternative the rest of the system can
      // never accommodate while a currently-expensive alternative would be
      // trivially absorbed by the primary step.  When progress stops, kick
      // every violated block onto its next alternative so the primary step
      // gets to adapt to a different case split.
      if (std::getenv("IRW_NO_KICK") == nullptr && viol_now >= prev * 0.999 &&
          viol_now > 0.02 && stalled > 0) {
        size_t bw = sys.blocks.size();
        for (size_t bi = 0; bi < sys.blocks.size(); ++bi)
          if (block_viol[bi] > 0 && sys.blocks[bi].alternatives.size() > 1 &&
              (bw == sys.blocks.size() || block_viol[bi] > block_viol[bw]))
            bw = bi;
        if (bw < sys.blocks.size()) {
          // Re-choose the stuck block's case split optimistically: score
          // each alternative with the linearly-occurring coefficients freed
          // as well, so an alternative the primary step could absorb at the
          // next iteration beats one that merely looks cheap right now.
          const auto& b = sys.blocks[bw];
          std::set<int> score_free = block_aux[bw];
          score_free.insert(lin_extra[bw].begin(), lin_extra[bw].end());
          std::optional<Rat> opt_t;
          int na = chosen[bw];
          for (size_t ai = 0; ai < b.alternatives.size(); ++ai) {
            if (static_cast<int>(ai) == chosen[bw]) continue;
            auto r = violation_lp(b.alternatives[ai], score_free, cur,
                                  search_margin, t_idx, Rat(10000));
            if (r && (!opt_t || r->t < *opt_t)) {
              opt_t = r->t;
              na = static_cast<int>(ai);
            }
          }
          if (na != chosen[bw]) {
            chosen[bw] = na;
            auto r = violation_lp(b.alternatives[na], block_aux[bw], cur,
                                  search_margin, t_idx, Rat(10000));
            if (r) {
              for (int v : block_aux[bw])
                cur[v] = r->point.count(v)
                             ? rationalize(r->point.at(v).get_d(), 1UL << 40)
                             : Rat(0);
              block_viol[bw] = r->t;
            } else {
              block_viol[bw] =
                  atoms_residual(b.alternatives[na], cur, search_margin);
            }
          }
        }
      }

      // Primary step: a full LP over every block is too large to solve
      // exactly, so work cutting-plane style against the worst offenders
      // plus a rotating window over the rest.
      std::vector<size_t> order(sys.blocks.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return block_viol[a] > block_viol[b];
      });
      // Far from feasibility, minimizing the sum of per-block maxima over
      // the worst offenders gives descent pressure on every active row.
      // Near feasibility that objective can trade a higher max for a lower
      // sum, so switch to a pure min-max over the entire system: the next
      // round's violation then cannot exceed this LP's optimum.
      const bool endgame = viol_now < 0.05;
      const size_t cap = 40;
      std::set<size_t> picked;
      if (endgame) {
        for (size_t i = 0; i < sys.blocks.size(); ++i) picked.insert(i);
      } else {
        for (size_t i = 0; i < order.size() && picked.size() < cap; ++i)
          if (block_viol[order[i]] > 0) picked.insert(order[i]);
        for (size_t i = 0; i < 6 && !sys.blocks.empty(); ++i)
          picked.insert((static_cast<size_t>(iter) * 6 + i) %
                        sys.blocks.size());
      }
      // Shell rows keep individual violation variables; each picked block
      // shares one, so the objective is the sum of per-block maxima and the
      // LP stays narrow even with many blocks active.
      std::vector<Inequality> active = sys.shell;
      std::vector<int> agroups;
      for (size_t i = 0; i < active.size(); ++i)
        agroups.push_back(endgame ? 0 : static_cast<int>(i));
      int gid = endgame ? 0 : static_cast<int>(active.size());
      for (size_t bi : picked)
        if (!sys.blocks[bi].alternatives.empty()) {
          for (const auto& a : sys.blocks[bi].alternatives[chosen[bi]]) {
            active.push_back(a);
            agroups.push_back(gid);
          }
          if (!endgame) ++gid;
        }
      // Coefficient variables and initial-state variables are optimized in
      // separate passes; atoms bilinear in (coefficients, state) are affine
      // in each pass alone.
      bool exact_steps = true;
      unsigned wseed = stalled > 2 ? static_cast<unsigned>(rng() | 1) : 0u;
      if (endgame) {
        slp_polish(cur, chosen, block_viol, search_margin);
      } else {
      if (!core.empty()) {
        auto r = violation_lp(active, core, cur, search_margin, t_idx,
                              Rat(1000), wseed, &agroups);
        if (std::getenv("IRW_EMBED_DEBUG"))
          std::fprintf(stderr, "  a-step: picked=%zu active=%zu lp=%s t=%g\n",
                       picked.size(), active.size(), r ? "ok" : "nonlinear",
                       r ? r->t.get_d() : -1.0);
        if (r) {
          for (int v : core)
            cur[v] = r->point.count(v)
                         ? rationalize(r->point.at(v).get_d(), 1UL << 40)
                         : Rat(0);
        } else {
          exact_steps = false;
        }
      }
      if (!stateset.empty()) {
        auto r = violation_lp(active, stateset, cur, search_margin, t_idx,
                              Rat(1000), wseed, &agroups);
        if (r) {
          for (int v : stateset)
            cur[v] = r->point.count(v)
                         ? rationalize(r->point.at(v).get_d(), 1UL << 40)
                         : Rat(0);
        } else {
          exact_steps = false;
        }
      }
      if (!exact_steps) {
        std::vector<int> free(primary.begin(), primary.end());
        numeric_descent(active, free, cur, margin_d, 150, rng);
      }
      }
      // Coordinate descent (multipliers | coefficients) has bilinear
      // fixpoints no sequence of exact per-group LPs escapes.  On a
      // persistent plateau, descend jointly over everything numerically;
      // the next multiplier step re-derives exact values from wherever this
      // lands.
      if (std::getenv("IRW_NO_KICK") == nullptr && stalled >= 4) {
        std::vector<Inequality> everything = sys.shell;
        for (size_t bi = 0; bi < sys.blocks.size(); ++bi)
          if (!sys.blocks[bi].alternatives.empty())
            for (const auto& a : sys.blocks[bi].alternatives[chosen[bi]])
              everything.push_back(a);
        std::vector<int> free(universe.begin(), universe.end());
        numeric_descent(everything, free, cur, margin_d, 200, rng);
      }

      if (std::getenv("IRW_EMBED_PROF"))
        std::fprintf(stderr, "  prof iter=%d a-step %.2fs\n", iter,
                     std::chrono::duration<double>(Clock::now() - ph1).count());
      auto ph2 = Clock::now();
      (void)ph2;
      if (satisfies(sys, cur)) return finish_sat(cur, chosen);
      if (viol_now < 2e-3)
        if (auto ex = try_exact(cur)) return finish_sat(ex->first, ex->second);
      if (std::getenv("IRW_EMBED_PROF"))
        std::fprintf(stderr, "  prof iter=%d tail %.2fs\n", iter,
                     std::chrono::duration<double>(Clock::now() - ph2).count());
      if (viol_now < best_violation) {
        best_violation = viol_now;
        best_point = cur;
      }
      if (std::getenv("IRW_EMBED_DEBUG"))
        std::fprintf(stderr, "embed restart=%d iter=%d viol=%g\n", restart,
                     iter, viol_now);
      if (viol_now >= prev * 0.999) {
        // Shallow plateaus are sticky local minima of the bilinear merit
        // function; a fresh basin is usually a better use of the budget
        // than grinding them further.
        if (++stalled >= (viol_now < 0.01 ? 2 : 5)) break;
      } else {
        stalled = 0;
        prev = viol_now;
      }
    }
  }

  if (best_violation < std::numeric_limits<double>::infinity())
    if (auto ex = try_exact(best_point))
      return finish_sat(ex->first, ex->second);
  if (best_violation <= opt.tolerance) {
    Assignment asg;
    for (int v : universe)
      asg.values[v] = best_point.count(v) ? best_point.at(v) : Rat(0);
    return {SolveStatus::Sat, asg, "embedded backend (numeric tolerance)"};
  }
  return {SolveStatus::Unknown, {}, "no feasible point found"};
}

// ---------------------------------------------------------------------------
// Complete exact backend for affine systems.

SolveResult exact_linear_solve(const GlobalSystem& sys, const VarTable& vt) {
  (void)vt;
  std::vector<LinCon> base;
  for (const auto& a : sys.shell) base.push_back(to_lincon(a));

  std::optional<std::map<int, Rat>> found;
  std::function<bool(size_t, std::vector<LinCon>&)> dfs =
      [&](size_t i, std::vector<LinCon>& rows) {
        if (!lp_sat(rows)) return false;
        if (i == sys.blocks.size()) {
          found = lp_point(rows);
          return found.has_value();
        }
        for (const auto& alt : sys.blocks[i].alternatives) {
          size_t mark = rows.size();
          for (const auto& a : alt) rows.push_back(to_lincon(a));
          if (dfs(i + 1, rows)) return true;
          rows.resize(mark);
        }
        return false;
      };
  std::vector<LinCon> rows = base;
  if (dfs(0, rows)) {
    Assignment asg;
    for (VarId v : sys.unknowns)
      asg.values[v.idx] = found->count(v.idx) ? found->at(v.idx) : Rat(0);
    return {SolveStatus::Sat, asg, "exact linear backend"};
  }
  return {SolveStatus::Unsat, {}, "exact linear backend"};
}

SolveResult solve(const GlobalSystem& sys, const VarTable& vt,
                  const SolveOptions& opt) {
  if (opt.backend == "embedded") {
    EmbeddedOptions e = opt.embedded;
    e.wall_seconds = std::min(e.wall_seconds, opt.timeout_seconds);
    return embedded_solve(sys, vt, e);
  }
  if (opt.backend == "exact-lp") {
    try {
      return exact_linear_solve(sys, vt);
    } catch (const std::invalid_argument& ex) {
      return {SolveStatus::Unknown, {},
              std::string("exact backend inapplicable: ") + ex.what()};
    }
  }
  if (opt.backend.rfind("smt:", 0) == 0)
    return external_solve(sys, vt, opt.backend.substr(4), opt.timeout_seconds);
  return {SolveStatus::Unknown, {}, "unknown backend: " + opt.backend};
}

}  // namespace irw
