#pragma once
#include "irw/encode.hpp"
#include "irw/lp.hpp"
#include "irw/vcgen.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace irw {

// One obligation lowered to a disjunction of conjunctive alternatives.
struct DisjunctiveBlock {
  std::vector<std::vector<Inequality>> alternatives;
};

// The assembled global constraint system: a conjunctive shell plus one
// disjunctive block per obligation.  `primary` holds the unknowns that carry
// meaning in the final witness (template coefficients, bound, initial state);
// `aux` holds per-obligation multipliers and other bookkeeping variables.
struct GlobalSystem {
  std::vector<VarId> unknowns;
  std::vector<VarId> primary;
  std::vector<VarId> state;  // initial-valuation subset of primary
  std::vector<VarId> aux;
  std::vector<Inequality> shell;
  std::vector<DisjunctiveBlock> blocks;
  std::optional<Polynomial> objective;  // maximized when a backend supports it
  int max_degree = 0;                   // before any degree reduction

  int constraint_count() const;
};

struct Assignment {
  std::map<int, Rat> values;

  std::string json(const VarTable& vt) const;
};

enum class SolveStatus { Sat, Unsat, Unknown };

struct SolveResult {
  SolveStatus status = SolveStatus::Unknown;
  Assignment assignment;  // meaningful when Sat
  std::string reason;
};

struct AssembleOptions {
  Rat eps_min = Rat(1, 1000);
  bool maximize_eps = false;
};

// Conjoin the per-obligation case systems with the initialization atoms and
// the lower bound on the progress increment.
GlobalSystem assemble(const std::vector<CaseSystem>& systems,
                      const InitConstraint& init, const TemplateSet& ts,
                      const AssembleOptions& opt = {});

// Exact satisfaction check of the full system (shell plus at least one
// alternative per block).  The point must cover every referenced variable.
bool satisfies(const GlobalSystem& sys, const std::map<int, Rat>& point);

// Lower the system to an equisatisfiable purely conjunctive form in which
// every polynomial has degree at most two: inequalities become equalities
// with bounded slack variables, each disjunction becomes a product of
// per-alternative squared-residual sums, and higher-degree monomials are
// split with memoized product variables.  New variables are appended to vt.
GlobalSystem reduce_to_qp(const GlobalSystem& sys, VarTable& vt);

// Deterministic SMT-LIB2 rendering (logic QF_NRA, one Real per unknown,
// native disjunctions, check-sat + get-model).
std::string export_smtlib(const GlobalSystem& sys, const VarTable& vt);

// Run an external solver on the SMT-LIB2 rendering.  `command` is a shell
// template; "{file}" is replaced by the problem path (appended when absent).
// The process must print sat/unsat/unknown and, for sat, a (model ...) block
// with (define-fun name () Real value) entries.
SolveResult external_solve(const GlobalSystem& sys, const VarTable& vt,
                           const std::string& command, double timeout_seconds);

struct EmbeddedOptions {
  int restarts = 60;
  int iterations = 40;       // alternating rounds per restart
  unsigned seed = 1;
  double tolerance = 1e-6;   // numeric acceptance threshold
  Rat strict_margin = Rat(1, 1000000000);
  double wall_seconds = 100.0;
};

// Numeric/exact hybrid search: alternate exact LP steps over the multiplier
// variables (which always occur linearly) and the primary variables, with
// randomized restarts; falls back to local descent when a step is nonlinear.
// Accepts only points that satisfy the system, exactly when possible and
// otherwise within the numeric tolerance.  Never reports Unsat.
SolveResult embedded_solve(const GlobalSystem& sys, const VarTable& vt,
                           const EmbeddedOptions& opt = {});

// Complete exact backend for systems whose atoms are all affine: depth-first
// enumeration of block alternatives with LP pruning.  Sat and Unsat are both
// definitive.  Throws std::invalid_argument on a nonlinear atom.
SolveResult exact_linear_solve(const GlobalSystem& sys, const VarTable& vt);

struct SolveOptions {
  std::string backend = "embedded";  // "embedded" | "exact-lp" | "smt:<cmd>"
  double timeout_seconds = 100.0;
  EmbeddedOptions embedded;
};

// Backend dispatch; timeouts yield Unknown, never Unsat.
SolveResult solve(const GlobalSystem& sys, const VarTable& vt,
                  const SolveOptions& opt);

}  // namespace irw
