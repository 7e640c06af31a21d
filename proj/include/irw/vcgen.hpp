#pragma once
#include "irw/templates.hpp"

namespace irw {

enum class PairKind { Inductive, Nonneg };

// One entailment obligation: the conjunction of `premise` must entail every
// atom of `conclusion`. Premise atoms are strict/non-strict (>, >=);
// conclusion atoms are non-strict in linear mode and strong (>>) in the
// polynomial pipelines.
struct ConstraintPair {
  std::vector<Inequality> premise;
  std::vector<Inequality> conclusion;
  int loc = -1;       // source location of the obligation
  int disjunct = 0;   // index within that location's case split
  PairKind kind = PairKind::Inductive;
};

// Existence of a covered initial state: fresh unknowns nu0_<var>, one per
// program variable, and the candidate-set plus initial-condition atoms
// instantiated at them (so the atoms mention unknowns only).
struct InitConstraint {
  std::vector<VarId> nu0;
  std::vector<Inequality> atoms;
};

// Per-location candidate description used for obligation generation. The
// synthesizer feeds template atoms (assertion = conjunction with unknown
// coefficients, eps = the unknown decrease variable); the checker feeds a
// concrete witness, where the assertion may be a union of conjunctive
// variants and eps a constant.
struct LocSpec {
  Formula assertion;  // built from >=, > atoms with and/or (no not)
  Polynomial rank;
  Polynomial eps;
};

struct VcOptions {
  bool universal = false;  // every enabled transition must stay covered
  // Polynomial pipelines: conclusions become strong (>>); target atoms are
  // additionally relaxed by target_slack (a reported weakening, re-validated
  // downstream on any synthesized candidate).
  bool strong_conclusions = false;
  Rat target_slack = Rat(0);
  int prune_level = 2;  // 0 = none, 1 = syntactic, 2 = + feasibility check
};

std::vector<LocSpec> specs_from_templates(const TemplateSet& ts);

// One-step "can move and keep ranking" condition along th: guard /\ covered
// after the update /\ rank drops by at least eps. An empty guard is encoded
// as the atom 1 >= 0.
Formula xi(const Transition& th, const std::vector<LocSpec>& specs);
// Universal counterpart: guard => (covered after update /\ rank drop).
Formula zeta(const Transition& th, const std::vector<LocSpec>& specs);

// Per location l: disjunctive normal form of
//   existential: assertion_l /\ /\_th not xi(th)
//   universal:   assertion_l /\ \/_th not zeta(th)
// one pair per disjunct, conclusion = target atoms at l, or {-1 >= 0} when l
// has no target. No pruning is applied here.
std::vector<ConstraintPair> existential_pairs(const TransitionSystem& sys,
                                              const std::vector<LocSpec>& specs,
                                              const VcOptions& opt);
std::vector<ConstraintPair> universal_pairs(const TransitionSystem& sys,
                                            const std::vector<LocSpec>& specs,
                                            const VcOptions& opt);

// Per location and assertion disjunct: (assertion clause, rank >= 0).
std::vector<ConstraintPair> nonneg_pairs(const TransitionSystem& sys,
                                         const std::vector<LocSpec>& specs,
                                         const VcOptions& opt);

// Inductive pairs (existential or universal per opt) followed by nonneg
// pairs, pruned at opt.prune_level.
std::vector<ConstraintPair> generate_pairs(const TransitionSystem& sys,
                                           const std::vector<LocSpec>& specs,
                                           const VcOptions& opt);

// Appends nu0_<var> unknowns to sys.vt.
InitConstraint init_constraints(TransitionSystem& sys, const TemplateSet& ts);

// Sound pruning only: a pair is dropped when its premise cannot hold for any
// assignment (constant-false atom, a syntactic g/-g contradiction with a
// strict side, or — at level 2 — an infeasible concrete subsystem), or when
// every conclusion atom is constant-true. Level 1 also strips constant-true
// premise atoms. Pairs of unknown status are always kept.
std::vector<ConstraintPair> prune(const std::vector<ConstraintPair>& pairs,
                                  const VarTable& vt, int level);

// Stable, human-readable dump (one block per pair, generation order).
std::string dump_pairs(const std::vector<ConstraintPair>& pairs,
                       const TransitionSystem& sys);

}  // namespace irw
