#pragma once
#include "irw/tsys.hpp"

namespace irw {

enum class TemplateMode { Linear, Poly };

// Symbolic candidate shape: per location, `k` inequalities with unknown
// coefficients describing a candidate inductive set, plus an unknown-coefficient
// ranking polynomial, plus a single global decrease parameter `eps`.
struct TemplateSet {
  TemplateMode mode = TemplateMode::Linear;
  int degree = 1;  // always 1 in linear mode
  int k = 1;
  VarId eps;
  std::vector<std::vector<Inequality>> A;  // per location: k atoms `p >= 0`
  std::vector<Polynomial> f;               // per location: ranking template
  std::vector<VarId> unknowns;             // creation order: c..., d..., eps
};

// Appends fresh unknowns to sys.vt with deterministic names: c0, c1, ...
// row-major over (location, conjunct, monomial), then d0, d1, ... over
// (location, monomial), then "eps". The monomial basis is
// monomials_up_to(program vars, degree); it contains 1, so the constant
// coefficient needs no special slot. In linear mode degree is forced to 1.
// Throws std::invalid_argument when k < 1 or degree < 1.
TemplateSet make_templates(TransitionSystem& sys, TemplateMode mode, int k,
                           int degree = 1);

}  // namespace irw
