#include "irw/vcgen.hpp"

#include "irw/interval.hpp"

#include <sstream>
#include <stdexcept>

namespace irw {

namespace {

Formula guard_formula(const Transition& th) {
  if (th.guard.empty())
    return Formula::mk_atom(Inequality{Polynomial(Rat(1)), Rel::Geq});
  std::vector<Formula> fs;
  for (const auto& g : th.guard) fs.push_back(Formula::mk_atom(g));
  return Formula::mk_and(std::move(fs));
}

Inequality drop_atom(const Transition& th, const std::vector<LocSpec>& specs) {
  const LocSpec& src = specs.at(th.src);
  const LocSpec& dst = specs.at(th.dst);
  Polynomial drop = src.rank - dst.rank.substitute(th.update) - src.eps;
  return Inequality{drop, Rel::Geq};
}

// Conclusion atoms for location l: target atoms verbatim, or {-1 >= 0} when
// the location has no target. In strong mode every atom becomes p >> 0 and
// actual target atoms are relaxed by target_slack.
std::vector<Inequality> conclusion_for(const TransitionSystem& sys, int l,
                                       const VcOptions& opt) {
  auto it = sys.targets.find(l);
  const bool is_target = it != sys.targets.end();
  std::vector<Inequality> rho;
  if (is_target)
    rho = it->second.atoms;
  else
    rho.push_back(Inequality{Polynomial(Rat(-1)), Rel::Geq});
  if (opt.strong_conclusions) {
    for (auto& a : rho) {
      if (is_target) a.lhs = a.lhs + Polynomial(opt.target_slack);
      a.rel = Rel::Strong;
    }
  } else {
    if (is_target && it->second.strong)
      throw std::invalid_argument(
          "strong targets are only supported by the polynomial pipelines");
    for (const auto& a : rho)
      if (a.rel != Rel::Geq)
        throw std::invalid_argument(
            "strict target atoms are only supported by the polynomial "
            "pipelines");
  }
  return rho;
}

std::vector<ConstraintPair> inductive_pairs(const TransitionSystem& sys,
                                            const std::vector<LocSpec>& specs,
                                            const VcOptions& opt) {
  std::vector<ConstraintPair> out;
  const int L = static_cast<int>(sys.locations.size());
  for (int l = 0; l < L; ++l) {
    std::vector<Formula> conj{specs.at(l).assertion};
    if (opt.universal) {
      std::vector<Formula> alts;
      for (int ti : sys.out(l))
        alts.push_back(Formula::mk_not(zeta(sys.transitions[ti], specs)));
      conj.push_back(Formula::mk_or(std::move(alts)));
    } else {
      for (int ti : sys.out(l))
        conj.push_back(Formula::mk_not(xi(sys.transitions[ti], specs)));
    }
    const auto rho = conclusion_for(sys, l, opt);
    int i = 0;
    for (auto& clause : dnf(Formula::mk_and(std::move(conj)))) {
      ConstraintPair p;
      p.premise = std::move(clause);
      p.conclusion = rho;
      p.loc = l;
      p.disjunct = i++;
      p.kind = PairKind::Inductive;
      out.push_back(std::move(p));
    }
  }
  return out;
}

bool constant_false(const Inequality& a) {
  return a.lhs.is_constant() && !a.holds(a.lhs.constant_term());
}

bool constant_true(const Inequality& a) {
  return a.lhs.is_constant() && a.holds(a.lhs.constant_term());
}

// True when the premise is contradictory for every assignment: some atom is
// constant-false, or it contains g and -g with at least one strict side.
bool syntactic_contradiction(const std::vector<Inequality>& premise) {
  for (const auto& a : premise)
    if (constant_false(a)) return true;
  for (size_t i = 0; i < premise.size(); ++i)
    for (size_t j = i + 1; j < premise.size(); ++j) {
      if (premise[j].lhs == -premise[i].lhs &&
          (premise[i].rel == Rel::Gt || premise[j].rel == Rel::Gt))
        return true;
    }
  return false;
}

}  // namespace

std::vector<LocSpec> specs_from_templates(const TemplateSet& ts) {
  std::vector<LocSpec> specs;
  const int L = static_cast<int>(ts.A.size());
  for (int l = 0; l < L; ++l) {
    LocSpec s;
    std::vector<Formula> fs;
    for (const auto& a : ts.A[l]) fs.push_back(Formula::mk_atom(a));
    s.assertion = Formula::mk_and(std::move(fs));
    s.rank = ts.f[l];
    s.eps = Polynomial::var(ts.eps);
    specs.push_back(std::move(s));
  }
  return specs;
}

Formula xi(const Transition& th, const std::vector<LocSpec>& specs) {
  std::vector<Formula> parts;
  parts.push_back(guard_formula(th));
  parts.push_back(specs.at(th.dst).assertion.substitute(th.update));
  parts.push_back(Formula::mk_atom(drop_atom(th, specs)));
  return Formula::mk_and(std::move(parts));
}

Formula zeta(const Transition& th, const std::vector<LocSpec>& specs) {
  Formula then = Formula::mk_and(
      {specs.at(th.dst).assertion.substitute(th.update),
       Formula::mk_atom(drop_atom(th, specs))});
  return Formula::mk_or({Formula::mk_not(guard_formula(th)), std::move(then)});
}

std::vector<ConstraintPair> existential_pairs(const TransitionSystem& sys,
                                              const std::vector<LocSpec>& specs,
                                              const VcOptions& opt) {
  VcOptions o = opt;
  o.universal = false;
  return inductive_pairs(sys, specs, o);
}

std::vector<ConstraintPair> universal_pairs(const TransitionSystem& sys,
                                            const std::vector<LocSpec>& specs,
                                            const VcOptions& opt) {
  VcOptions o = opt;
  o.universal = true;
  return inductive_pairs(sys, specs, o);
}

std::vector<ConstraintPair> nonneg_pairs(const TransitionSystem& sys,
                                         const std::vector<LocSpec>& specs,
                                         const VcOptions& opt) {
  std::vector<ConstraintPair> out;
  const int L = static_cast<int>(sys.locations.size());
  for (int l = 0; l < L; ++l) {
    Inequality rho{specs.at(l).rank,
                   opt.strong_conclusions ? Rel::Strong : Rel::Geq};
    int i = 0;
    for (auto& clause : dnf(specs.at(l).assertion)) {
      ConstraintPair p;
      p.premise = std::move(clause);
      p.conclusion = {rho};
      p.loc = l;
      p.disjunct = i++;
      p.kind = PairKind::Nonneg;
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<ConstraintPair> generate_pairs(const TransitionSystem& sys,
                                           const std::vector<LocSpec>& specs,
                                           const VcOptions& opt) {
  auto pairs = opt.universal ? universal_pairs(sys, specs, opt)
                             : existential_pairs(sys, specs, opt);
  auto nn = nonneg_pairs(sys, specs, opt);
  pairs.insert(pairs.end(), nn.begin(), nn.end());
  return prune(pairs, sys.vt, opt.prune_level);
}

InitConstraint init_constraints(TransitionSystem& sys, const TemplateSet& ts) {
  InitConstraint ic;
  std::map<int, Polynomial> sub;
  for (VarId v : sys.vt.all(VarSort::Program)) {
    VarId n = sys.vt.fresh("nu0_" + sys.vt.name(v), VarSort::Unknown);
    ic.nu0.push_back(n);
    sub[v.idx] = Polynomial::var(n);
  }
  for (const auto& a : ts.A.at(sys.initial))
    ic.atoms.push_back(Inequality{a.lhs.substitute(sub), a.rel});
  for (const auto& a : sys.init)
    ic.atoms.push_back(Inequality{a.lhs.substitute(sub), a.rel});
  return ic;
}

std::vector<ConstraintPair> prune(const std::vector<ConstraintPair>& pairs,
                                  const VarTable& vt, int level) {
  if (level <= 0) return pairs;
  std::vector<ConstraintPair> out;
  for (const auto& p : pairs) {
    if (syntactic_contradiction(p.premise)) continue;
    bool all_true = true;
    for (const auto& a : p.conclusion)
      if (!constant_true(a)) all_true = false;
    if (all_true && !p.conclusion.empty()) continue;
    if (level >= 2) {
      // The concrete (unknown-free) part of the premise is a fixed
      // polynomial system; if it is infeasible on its own, the premise can
      // never hold, whatever the unknowns are.
      std::vector<Inequality> concrete;
      for (const auto& a : p.premise)
        if (!a.lhs.uses_sort(vt, VarSort::Unknown)) concrete.push_back(a);
      if (!concrete.empty() &&
          interval_solve(concrete, 2000).status == QStatus::Unsat)
        continue;
    }
    ConstraintPair q = p;
    std::vector<Inequality> kept;
    for (const auto& a : q.premise)
      if (!constant_true(a)) kept.push_back(a);
    q.premise = std::move(kept);
    out.push_back(std::move(q));
  }
  return out;
}

std::string dump_pairs(const std::vector<ConstraintPair>& pairs,
                       const TransitionSystem& sys) {
  std::ostringstream os;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    os << "pair " << i << ": loc " << sys.locations.at(p.loc) << " disjunct "
       << p.disjunct << ' '
       << (p.kind == PairKind::Inductive ? "inductive" : "nonneg") << '\n';
    os << "  premise:\n";
    for (const auto& a : p.premise) os << "    " << a.str(sys.vt) << '\n';
    os << "  conclusion:\n";
    for (const auto& a : p.conclusion) os << "    " << a.str(sys.vt) << '\n';
  }
  return os.str();
}

}  // namespace irw
