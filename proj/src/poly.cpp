#include "irw/poly.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace irw {

// ---------------------------------------------------------------- rationals

std::optional<Rat> parse_rat(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::string t = s;
  bool neg = false;
  size_t i = 0;
  if (t[i] == '+' || t[i] == '-') neg = (t[i++] == '-');
  std::string intpart, fracpart, exppart;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) intpart += t[i++];
  if (i < t.size() && t[i] == '.') {
    ++i;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) fracpart += t[i++];
  } else if (i < t.size() && t[i] == '/') {
    ++i;
    std::string den;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) den += t[i++];
    if (i != t.size() || intpart.empty() || den.empty()) return std::nullopt;
    mpz_class numz(intpart), denz(den);
    if (denz == 0) return std::nullopt;
    Rat q(numz, denz);
    q.canonicalize();
    return neg ? Rat(-q) : q;
  }
  long exp10 = 0;
  if (i < t.size() && (t[i] == 'e' || t[i] == 'E')) {
    ++i;
    bool eneg = false;
    if (i < t.size() && (t[i] == '+' || t[i] == '-')) eneg = (t[i++] == '-');
    if (i == t.size()) return std::nullopt;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) exppart += t[i++];
    if (exppart.empty()) return std::nullopt;
    exp10 = std::stol(exppart) * (eneg ? -1 : 1);
  }
  if (i != t.size() || (intpart.empty() && fracpart.empty())) return std::nullopt;
  mpz_class num(intpart.empty() ? "0" : intpart);
  for (char c : fracpart) num = num * 10 + (c - '0');
  mpz_class den = 1;
  for (size_t k = 0; k < fracpart.size(); ++k) den *= 10;
  Rat q(num, den);
  q.canonicalize();
  mpz_class p10 = 1;
  for (long k = 0; k < std::labs(exp10); ++k) p10 *= 10;
  if (exp10 > 0) q *= Rat(p10);
  if (exp10 < 0) q /= Rat(p10);
  q.canonicalize();
  return neg ? Rat(-q) : q;
}

std::string rat_str(const Rat& q) {
  Rat c = q;
  c.canonicalize();
  std::ostringstream os;
  os << c;
  return os.str();
}

Rat rationalize(double x, unsigned long max_den) {
  if (!std::isfinite(x)) throw std::invalid_argument("rationalize: non-finite value");
  bool neg = x < 0;
  double v = std::fabs(x);
  // Continued-fraction convergents p/q with q <= max_den.
  mpz_class p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double frac = v;
  for (int it = 0; it < 64; ++it) {
    double fa = std::floor(frac);
    if (fa > 1e18) break;
    mpz_class a(static_cast<unsigned long>(fa));
    mpz_class p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > mpz_class(max_den)) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    double rem = frac - fa;
    if (rem < 1e-15) break;
    frac = 1.0 / rem;
  }
  Rat q(p1, q1 == 0 ? mpz_class(1) : q1);
  q.canonicalize();
  return neg ? Rat(-q) : q;
}

// ---------------------------------------------------------------- variables

VarId VarTable::fresh(const std::string& name, VarSort sort) {
  if (by_name_.count(name)) throw std::invalid_argument("duplicate variable name: " + name);
  int idx = static_cast<int>(names_.size());
  names_.push_back(name);
  sorts_.push_back(sort);
  by_name_[name] = idx;
  return VarId{idx};
}

std::optional<VarId> VarTable::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return VarId{it->second};
}

std::vector<VarId> VarTable::all(VarSort sort) const {
  std::vector<VarId> out;
  for (int i = 0; i < size(); ++i)
    if (sorts_[i] == sort) out.push_back(VarId{i});
  return out;
}

// ---------------------------------------------------------------- monomials

int Monomial::total_degree() const {
  int d = 0;
  for (auto& [v, e] : exps) d += e;
  return d;
}

int Monomial::degree_in(int var) const {
  for (auto& [v, e] : exps)
    if (v == var) return e;
  return 0;
}

Monomial Monomial::operator*(const Monomial& o) const {
  Monomial r;
  size_t i = 0, j = 0;
  while (i < exps.size() || j < o.exps.size()) {
    if (j == o.exps.size() || (i < exps.size() && exps[i].first < o.exps[j].first))
      r.exps.push_back(exps[i++]);
    else if (i == exps.size() || o.exps[j].first < exps[i].first)
      r.exps.push_back(o.exps[j++]);
    else {
      r.exps.emplace_back(exps[i].first, exps[i].second + o.exps[j].second);
      ++i; ++j;
    }
  }
  return r;
}

bool MonoOrder::operator()(const Monomial& a, const Monomial& b) const {
  int da = a.total_degree(), db = b.total_degree();
  if (da != db) return da < db;
  // Same degree: earlier variables with higher exponents come first.
  size_t i = 0, j = 0;
  while (i < a.exps.size() && j < b.exps.size()) {
    if (a.exps[i].first != b.exps[j].first)
      return a.exps[i].first < b.exps[j].first;  // a has the earlier var
    if (a.exps[i].second != b.exps[j].second)
      return a.exps[i].second > b.exps[j].second;
    ++i; ++j;
  }
  return i < a.exps.size();  // remaining factors mean earlier vars used up more
}

// -------------------------------------------------------------- polynomials

Polynomial::Polynomial(const Rat& c) {
  Rat q = c;
  q.canonicalize();
  if (q != 0) terms_[Monomial{}] = q;
}

Polynomial Polynomial::var(VarId v, int exp) {
  Polynomial p;
  if (exp == 0) return Polynomial(Rat(1));
  p.terms_[Monomial{{{v.idx, exp}}}] = 1;
  return p;
}

void Polynomial::add_term(const Monomial& m, const Rat& c) {
  Rat q = c;
  q.canonicalize();
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    if (q != 0) terms_[m] = q;
  } else {
    it->second += q;
    if (it->second == 0) terms_.erase(it);
  }
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  for (auto& [m, c] : o.terms_) r.add_term(m, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  Polynomial r = *this;
  for (auto& [m, c] : o.terms_) r.add_term(m, -c);
  return r;
}

Polynomial Polynomial::operator-() const {
  Polynomial r;
  for (auto& [m, c] : terms_) r.terms_[m] = -c;
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r;
  for (auto& [m1, c1] : terms_)
    for (auto& [m2, c2] : o.terms_) r.add_term(m1 * m2, c1 * c2);
  return r;
}

Polynomial Polynomial::operator*(const Rat& c) const {
  Polynomial r;
  Rat q = c;
  q.canonicalize();
  if (q == 0) return r;
  for (auto& [m, k] : terms_) r.terms_[m] = k * q;
  return r;
}

bool Polynomial::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.exps.empty());
}

Rat Polynomial::constant_term() const {
  auto it = terms_.find(Monomial{});
  return it == terms_.end() ? Rat(0) : it->second;
}

int Polynomial::total_degree() const {
  int d = 0;
  for (auto& [m, c] : terms_) d = std::max(d, m.total_degree());
  return d;
}

int Polynomial::degree_in_sort(const VarTable& vt, VarSort sort) const {
  int d = 0;
  for (auto& [m, c] : terms_) {
    int md = 0;
    for (auto& [v, e] : m.exps)
      if (vt.sort(VarId{v}) == sort) md += e;
    d = std::max(d, md);
  }
  return d;
}

std::set<int> Polynomial::vars() const {
  std::set<int> out;
  for (auto& [m, c] : terms_)
    for (auto& [v, e] : m.exps) out.insert(v);
  return out;
}

bool Polynomial::uses_sort(const VarTable& vt, VarSort sort) const {
  for (int v : vars())
    if (vt.sort(VarId{v}) == sort) return true;
  return false;
}

Polynomial Polynomial::substitute(const std::map<int, Polynomial>& sub) const {
  Polynomial r;
  for (auto& [m, c] : terms_) {
    Polynomial t(c);
    for (auto& [v, e] : m.exps) {
      auto it = sub.find(v);
      Polynomial base = (it != sub.end()) ? it->second : Polynomial::var(VarId{v});
      for (int k = 0; k < e; ++k) t = t * base;
    }
    r = r + t;
  }
  return r;
}

Rat Polynomial::eval(const std::map<int, Rat>& point) const {
  Rat r = 0;
  for (auto& [m, c] : terms_) {
    Rat t = c;
    for (auto& [v, e] : m.exps) {
      auto it = point.find(v);
      if (it == point.end()) throw std::invalid_argument("eval: unassigned variable");
      for (int k = 0; k < e; ++k) t *= it->second;
    }
    r += t;
  }
  return r;
}

std::string Polynomial::str(const VarTable& vt) const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (auto& [m, c] : terms_) {
    Rat a = c;
    if (first) {
      if (a < 0) { os << "-"; a = -a; }
    } else {
      os << (a < 0 ? " - " : " + ");
      if (a < 0) a = -a;
    }
    first = false;
    bool unit = (a == 1) && !m.exps.empty();
    if (!unit) os << rat_str(a);
    bool star = !unit;
    for (auto& [v, e] : m.exps) {
      if (star) os << "*";
      star = true;
      os << vt.name(VarId{v});
      if (e > 1) os << "^" << e;
    }
  }
  return os.str();
}

// -------------------------------------------------------------- inequalities

static const char* rel_str(Rel r) {
  switch (r) {
    case Rel::Geq: return ">= 0";
    case Rel::Gt: return "> 0";
    case Rel::Strong: return ">> 0";
    case Rel::Eq: return "= 0";
  }
  return "";
}

std::string Inequality::str(const VarTable& vt) const {
  return lhs.str(vt) + " " + rel_str(rel);
}

bool Inequality::holds(const Rat& value) const {
  switch (rel) {
    case Rel::Geq: return value >= 0;
    case Rel::Gt:
    case Rel::Strong: return value > 0;
    case Rel::Eq: return value == 0;
  }
  return false;
}

Inequality negate_atom(const Inequality& a) {
  switch (a.rel) {
    case Rel::Geq: return Inequality{-a.lhs, Rel::Gt};
    case Rel::Gt: return Inequality{-a.lhs, Rel::Geq};
    default:
      throw std::invalid_argument("negate_atom: only >= and > atoms can be negated");
  }
}

// ------------------------------------------------------------------ formulas

Formula Formula::mk_atom(Inequality a) {
  Formula f;
  f.kind = Atom;
  f.atom = std::move(a);
  return f;
}
Formula Formula::mk_and(std::vector<Formula> kids) {
  Formula f;
  f.kind = And;
  f.kids = std::move(kids);
  return f;
}
Formula Formula::mk_or(std::vector<Formula> kids) {
  Formula f;
  f.kind = Or;
  f.kids = std::move(kids);
  return f;
}
Formula Formula::mk_not(Formula g) {
  Formula f;
  f.kind = Not;
  f.kids.push_back(std::move(g));
  return f;
}

Formula Formula::substitute(const std::map<int, Polynomial>& sub) const {
  Formula f = *this;
  if (kind == Atom) {
    f.atom.lhs = atom.lhs.substitute(sub);
  } else {
    for (auto& k : f.kids) k = k.substitute(sub);
  }
  return f;
}

bool Formula::eval(const std::map<int, Rat>& point) const {
  switch (kind) {
    case Atom: return atom.holds(atom.lhs.eval(point));
    case And:
      for (auto& k : kids)
        if (!k.eval(point)) return false;
      return true;
    case Or:
      for (auto& k : kids)
        if (k.eval(point)) return true;
      return false;
    case Not: return !kids[0].eval(point);
  }
  return false;
}

std::string Formula::str(const VarTable& vt) const {
  switch (kind) {
    case Atom: return atom.str(vt);
    case Not: return "!(" + kids[0].str(vt) + ")";
    case And:
    case Or: {
      if (kids.empty()) return kind == And ? "true" : "false";
      std::string sep = kind == And ? " & " : " | ";
      std::string s = "(";
      for (size_t i = 0; i < kids.size(); ++i) s += (i ? sep : "") + kids[i].str(vt);
      return s + ")";
    }
  }
  return "";
}

namespace {

// Negation-normal form with negations resolved into atoms.
Formula to_nnf(const Formula& f, bool neg) {
  switch (f.kind) {
    case Formula::Atom:
      return Formula::mk_atom(neg ? negate_atom(f.atom) : f.atom);
    case Formula::Not:
      return to_nnf(f.kids[0], !neg);
    case Formula::And:
    case Formula::Or: {
      std::vector<Formula> kids;
      for (auto& k : f.kids) kids.push_back(to_nnf(k, neg));
      bool conj = (f.kind == Formula::And) != neg;
      return conj ? Formula::mk_and(std::move(kids)) : Formula::mk_or(std::move(kids));
    }
  }
  return f;
}

struct IneqLess {
  bool operator()(const Inequality& a, const Inequality& b) const {
    if (a.rel != b.rel) return a.rel < b.rel;
    auto &ta = a.lhs.terms(), &tb = b.lhs.terms();
    return std::lexicographical_compare(
        ta.begin(), ta.end(), tb.begin(), tb.end(), [](auto& x, auto& y) {
          MonoOrder mo;
          if (mo(x.first, y.first)) return true;
          if (mo(y.first, x.first)) return false;
          return x.second < y.second;
        });
  }
};

std::vector<Clause> dnf_nnf(const Formula& f) {
  switch (f.kind) {
    case Formula::Atom:
      return {{f.atom}};
    case Formula::Or: {
      std::vector<Clause> out;
      for (auto& k : f.kids)
        for (auto& c : dnf_nnf(k)) out.push_back(c);
      return out;
    }
    case Formula::And: {
      std::vector<Clause> out = {{}};
      for (auto& k : f.kids) {
        std::vector<Clause> next;
        auto sub = dnf_nnf(k);
        for (auto& a : out)
          for (auto& b : sub) {
            Clause c = a;
            c.insert(c.end(), b.begin(), b.end());
            next.push_back(std::move(c));
          }
        out = std::move(next);
      }
      return out;
    }
    default:
      throw std::logic_error("dnf: unexpected Not in NNF");
  }
}

}  // namespace

std::vector<Clause> dnf(const Formula& f) {
  auto raw = dnf_nnf(to_nnf(f, false));
  std::vector<Clause> out;
  std::set<std::string> ids;
  for (auto& c : raw) {
    // Deduplicate atoms within the clause, preserving first-seen order.
    Clause clean;
    for (auto& a : c) {
      bool dup = false;
      for (auto& b : clean)
        if (b == a) { dup = true; break; }
      if (!dup) clean.push_back(a);
    }
    // Deduplicate identical clauses (as atom sets).
    Clause key = clean;
    std::sort(key.begin(), key.end(), IneqLess{});
    std::string id;
    for (auto& a : key) {
      id += std::to_string(static_cast<int>(a.rel)) + "|";
      for (auto& [m, co] : a.lhs.terms()) {
        for (auto& [v, e] : m.exps) id += std::to_string(v) + "^" + std::to_string(e) + ".";
        id += rat_str(co) + ",";
      }
      id += ";";
    }
    if (ids.insert(id).second) out.push_back(std::move(clean));
  }
  return out;
}

std::vector<Monomial> monomials_up_to(const std::vector<VarId>& vars, int d) {
  std::vector<Monomial> out = {Monomial{}};
  // Generate all exponent vectors with total degree <= d, then sort.
  std::vector<int> exps(vars.size(), 0);
  auto rec = [&](auto&& self, size_t i, int left) -> void {
    if (i == vars.size()) {
      Monomial m;
      for (size_t k = 0; k < vars.size(); ++k)
        if (exps[k] > 0) m.exps.emplace_back(vars[k].idx, exps[k]);
      if (!m.exps.empty()) out.push_back(m);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      exps[i] = e;
      self(self, i + 1, left - e);
    }
    exps[i] = 0;
  };
  rec(rec, 0, d);
  std::sort(out.begin(), out.end(), [](const Monomial& a, const Monomial& b) {
    return MonoOrder{}(a, b);
  });
  return out;
}

std::map<Monomial, Polynomial, MonoOrder> collect_by_program_monomials(
    const Polynomial& p, const VarTable& vt) {
  std::map<Monomial, Polynomial, MonoOrder> out;
  for (auto& [m, c] : p.terms()) {
    Monomial prog, unk;
    for (auto& [v, e] : m.exps)
      (vt.sort(VarId{v}) == VarSort::Program ? prog : unk).exps.emplace_back(v, e);
    out[prog].add_term(unk, c);
  }
  return out;
}

// -------------------------------------------------------------------- parser

namespace {

struct PolyParser {
  const std::string& s;
  size_t pos = 0;
  VarTable& vt;
  std::optional<VarSort> create_sort;

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("parse error at position " + std::to_string(pos) + ": " + msg);
  }

  Polynomial expr() {
    skip();
    bool neg = false;
    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) neg = (s[pos++] == '-');
    Polynomial r = term();
    if (neg) r = -r;
    skip();
    while (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
      bool minus = (s[pos++] == '-');
      Polynomial t = term();
      r = minus ? r - t : r + t;
      skip();
    }
    return r;
  }

  Polynomial term() {
    Polynomial r = factor();
    skip();
    while (pos < s.size() && s[pos] == '*') {
      ++pos;
      r = r * factor();
      skip();
    }
    return r;
  }

  Polynomial factor() {
    Polynomial b = base();
    skip();
    if (pos < s.size() && s[pos] == '^') {
      ++pos;
      skip();
      size_t st = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      if (pos == st) fail("expected exponent");
      int e = std::stoi(s.substr(st, pos - st));
      Polynomial r(Rat(1));
      for (int k = 0; k < e; ++k) r = r * b;
      return r;
    }
    return b;
  }

  Polynomial base() {
    skip();
    if (pos >= s.size()) fail("unexpected end of input");
    if (s[pos] == '(') {
      ++pos;
      Polynomial r = expr();
      skip();
      if (pos >= s.size() || s[pos] != ')') fail("expected ')'");
      ++pos;
      return r;
    }
    if (s[pos] == '-') {
      ++pos;
      return -factor();
    }
    if (std::isdigit(static_cast<unsigned char>(s[pos]))) {
      size_t st = pos;
      while (pos < s.size() &&
             (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.' || s[pos] == '/'))
        ++pos;
      auto q = parse_rat(s.substr(st, pos - st));
      if (!q) fail("bad numeric literal");
      return Polynomial(*q);
    }
    if (std::isalpha(static_cast<unsigned char>(s[pos])) || s[pos] == '_') {
      size_t st = pos;
      while (pos < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
        ++pos;
      std::string name = s.substr(st, pos - st);
      auto v = vt.find(name);
      if (!v) {
        if (!create_sort) fail("unknown variable '" + name + "'");
        v = vt.fresh(name, *create_sort);
      }
      return Polynomial::var(*v);
    }
    fail(std::string("unexpected character '") + s[pos] + "'");
  }
};

}  // namespace

Polynomial parse_poly(const std::string& s, VarTable& vt, std::optional<VarSort> create_sort) {
  PolyParser p{s, 0, vt, create_sort};
  Polynomial r = p.expr();
  p.skip();
  if (p.pos != s.size()) p.fail("trailing input");
  return r;
}

}  // namespace irw
