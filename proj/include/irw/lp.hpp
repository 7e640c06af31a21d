#pragma once
#include "irw/poly.hpp"

#include <map>
#include <optional>
#include <vector>

namespace irw {

// Affine expression a·x + b over variable indices.
struct LinTerm {
  std::map<int, Rat> a;
  Rat b = 0;
};

// a·x + b rel 0 with rel in {Geq, Gt, Eq}; Strong is treated as Gt.
struct LinCon {
  LinTerm t;
  Rel rel = Rel::Geq;
};

struct LpOutcome {
  enum Status { Optimal, Infeasible, Unbounded } status = Infeasible;
  Rat value = 0;                // objective value when Optimal
  std::map<int, Rat> point;     // witness point when Optimal
};

// Exact simplex (Bland's rule) over free rational variables.
// Rows may use Geq and Eq only.
LpOutcome lp_maximize(const LinTerm& obj, const std::vector<LinCon>& rows);

// Exact feasibility including strict rows: a point exists iff result has one.
// Strict rows are handled by maximizing a shared positive margin.
std::optional<std::map<int, Rat>> lp_point(const std::vector<LinCon>& rows);
bool lp_sat(const std::vector<LinCon>& rows);

// Convert an affine inequality to a LinCon; throws if lhs is nonlinear.
LinCon to_lincon(const Inequality& a);
bool is_affine(const Polynomial& p);

}  // namespace irw
