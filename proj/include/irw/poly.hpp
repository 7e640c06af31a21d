#pragma once
#include "irw/rat.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace irw {

enum class VarSort { Program, Unknown };

struct VarId {
  int idx = -1;
  bool operator==(const VarId&) const = default;
  auto operator<=>(const VarId&) const = default;
};

// Two-sorted variable table; names are unique across both sorts.
class VarTable {
 public:
  VarId fresh(const std::string& name, VarSort sort);
  std::optional<VarId> find(const std::string& name) const;
  const std::string& name(VarId v) const { return names_.at(v.idx); }
  VarSort sort(VarId v) const { return sorts_.at(v.idx); }
  int size() const { return static_cast<int>(names_.size()); }
  std::vector<VarId> all(VarSort sort) const;

 private:
  std::vector<std::string> names_;
  std::vector<VarSort> sorts_;
  std::map<std::string, int> by_name_;
};

// Power product, exponents keyed by variable index (sorted, exponents > 0).
struct Monomial {
  std::vector<std::pair<int, int>> exps;  // (var idx, exponent)

  int total_degree() const;
  int degree_in(int var) const;
  bool operator==(const Monomial&) const = default;
  Monomial operator*(const Monomial& o) const;
};

// Graded order: lower total degree first; within a degree, a higher exponent
// on an earlier-created variable comes first (so for {x,y}: 1,x,y,x2,xy,y2).
struct MonoOrder {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(const Rat& c);
  static Polynomial var(VarId v, int exp = 1);

  const std::map<Monomial, Rat, MonoOrder>& terms() const { return terms_; }

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator-() const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(const Rat& c) const;
  bool operator==(const Polynomial&) const = default;

  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  Rat constant_term() const;
  int total_degree() const;  // 0 for the zero polynomial
  // Max total degree counting only variables of the given sort.
  int degree_in_sort(const VarTable& vt, VarSort sort) const;
  std::set<int> vars() const;
  bool uses_sort(const VarTable& vt, VarSort sort) const;

  // Simultaneous substitution var -> polynomial (vars not in the map stay).
  Polynomial substitute(const std::map<int, Polynomial>& sub) const;
  // Evaluate; every variable of the polynomial must be assigned.
  Rat eval(const std::map<int, Rat>& point) const;

  std::string str(const VarTable& vt) const;

  void add_term(const Monomial& m, const Rat& c);  // accumulates, drops zeros

 private:
  std::map<Monomial, Rat, MonoOrder> terms_;
};

enum class Rel { Geq, Gt, Strong, Eq };  // lhs >= 0, > 0, >> 0, = 0

struct Inequality {
  Polynomial lhs;
  Rel rel = Rel::Geq;
  bool operator==(const Inequality&) const = default;
  std::string str(const VarTable& vt) const;
  bool holds(const Rat& value) const;  // Strong treated as Gt
};

// !(p >= 0) => -p > 0 ; !(p > 0) => -p >= 0. Strong/Eq atoms cannot be negated.
Inequality negate_atom(const Inequality& a);

struct Formula {
  enum Kind { Atom, And, Or, Not } kind = And;
  Inequality atom;              // for Atom
  std::vector<Formula> kids;    // for And/Or/Not (Not has one kid)

  static Formula mk_atom(Inequality a);
  static Formula mk_and(std::vector<Formula> kids);
  static Formula mk_or(std::vector<Formula> kids);
  static Formula mk_not(Formula f);
  static Formula mk_true() { return mk_and({}); }

  Formula substitute(const std::map<int, Polynomial>& sub) const;
  bool eval(const std::map<int, Rat>& point) const;
  std::string str(const VarTable& vt) const;
};

using Clause = std::vector<Inequality>;  // conjunction of atoms

// Disjunctive normal form. Negations are pushed to atoms via negate_atom
// (throws std::invalid_argument on negated Strong/Eq atoms). Atoms inside a
// clause and identical clauses are deduplicated syntactically; no semantic
// pruning happens here.
std::vector<Clause> dnf(const Formula& f);

// All monomials over the given variables with total degree <= d, in MonoOrder.
std::vector<Monomial> monomials_up_to(const std::vector<VarId>& vars, int d);

// View p as a polynomial in the program variables: map from program-variable
// monomial to its coefficient, itself a polynomial over unknown variables.
std::map<Monomial, Polynomial, MonoOrder> collect_by_program_monomials(
    const Polynomial& p, const VarTable& vt);

// Parse a polynomial expression: + - * ^ ( ), rational/decimal literals,
// names resolved in vt (optionally creating unknowns of the given sort).
// Throws std::invalid_argument with a position message on bad input.
Polynomial parse_poly(const std::string& s, VarTable& vt,
                      std::optional<VarSort> create_sort = std::nullopt);

}  // namespace irw
