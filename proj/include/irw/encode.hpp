#pragma once
#include "irw/vcgen.hpp"

#include <map>
#include <string>

namespace irw {

enum class CaseTag {
  Combination,  // conclusion as a non-negative combination of the premise
  MinusOne,     // premise refuted: -1 >= 0 derivable
  ZeroStrict,   // premise refuted: 0 > 0 derivable using a strict atom
  Handelman,    // conclusion as a positive combination of monoid elements
  Putinar,      // conclusion as y0 + SOS combination of the premise
  NullCase,     // premise refuted via a square-slack polynomial identity
};

// One alternative: a conjunctive constraint system over unknowns only.
struct CaseBlock {
  CaseTag tag = CaseTag::Combination;
  int strict_index = -1;  // premise index j for NullCase alternatives
  std::vector<Inequality> constraints;  // relations >=, >, =
};

// Encoding of one entailment obligation (pair + conclusion atom index):
// the disjunction of the alternatives is equivalent to the obligation.
struct CaseSystem {
  int pair_loc = -1;
  int pair_disjunct = 0;
  int conclusion_index = 0;
  std::vector<CaseBlock> cases;
  std::vector<VarId> fresh;  // unknowns created while encoding
  int max_degree = 0;        // before any downstream degree reduction
};

// Unknown-coefficient polynomial constrained to be a sum of squares:
// h = eta_1*m_1 + ... + eta_n*m_n together with a lower-triangular matrix
// template L (dimension r = #monomials of degree <= deg/2) such that
// h = y^T L L^T y, where y is the canonical monomial vector. `constraints`
// holds the diagonal non-negativity atoms and the eta-vs-L matching
// equalities.
struct SosTemplate {
  Polynomial h;             // linear in the eta unknowns
  std::vector<VarId> etas;  // one per monomial of degree <= deg
  std::vector<VarId> ls;    // row-major lower-triangular entries
  int deg = 0;              // effective (even) degree
  int dim = 0;              // r
  std::vector<Inequality> constraints;
};

// Deterministic fresh-unknown allocation on top of a VarTable. Prefix
// counters are independent, so e.g. the y-variables of consecutive blocks
// are numbered consecutively.
class EncodeCtx {
 public:
  explicit EncodeCtx(VarTable& vt) : vt_(vt) {}
  VarId fresh(const std::string& prefix, VarSort sort = VarSort::Unknown);
  VarTable& vt() { return vt_; }

 private:
  VarTable& vt_;
  std::map<std::string, int> next_;
};

// Equalities (over the non-program coefficients) equivalent to lhs == rhs as
// polynomials in the program-sorted variables. Identical sides give an empty
// list.
std::vector<Inequality> match_coefficients(const Polynomial& lhs,
                                           const Polynomial& rhs,
                                           const VarTable& vt);

// Affine entailment: three alternatives per the combination / -1 >= 0 /
// 0 > 0 trichotomy, with fresh multipliers y >= 0 and coefficient-matching
// equalities. When the conclusion is itself -1 >= 0 the combination
// alternative coincides with the -1 case and is merged into it. Throws
// std::invalid_argument on non-affine premise atoms or a conclusion atom
// that is not non-strict.
CaseSystem farkas_cases(const ConstraintPair& pair, EncodeCtx& ctx,
                        int conclusion = 0);

// All products of the premise left-hand sides with total degree <= d,
// including the empty product 1. Ordered by number of factors, then by
// non-decreasing factor index tuples. Degree-0 factors are not multiplied in
// (their products are constants, already represented by 1).
std::vector<Polynomial> monoid_up_to(const std::vector<Inequality>& lambda,
                                     int d);

// Positive combination over the degree-d monoid (y0 > 0, y_i >= 0), plus the
// two Farkas refutation alternatives. Premise must be affine; the conclusion
// atom must be strong.
CaseSystem handelman_cases(const ConstraintPair& pair, int d, EncodeCtx& ctx,
                           int conclusion = 0);

// Fresh SOS-constrained polynomial template over the given variables with
// degree <= d (odd d is rounded up; see SosTemplate::deg).
SosTemplate sos_template(const std::vector<VarId>& vars, int d,
                         EncodeCtx& ctx);

// Polynomial entailment: (Putinar combination with y0 > 0 and SOS weights of
// degree <= y4) or (SOS refutation of the premise, weights of degree <= y1)
// or (square-slack refutation: per strict premise atom j, fresh program-
// sorted w variables and templates of degree <= y2 over V and w satisfying
// w_j^(2*y3) = sum h_i * (g_i - w_i^2)). The conclusion atom must be strong.
CaseSystem putinar_cases(const ConstraintPair& pair, int y1, int y2, int y3,
                         int y4, EncodeCtx& ctx, int conclusion = 0);

enum class EncodeMode { Farkas, Handelman, Putinar };

struct EncodeOptions {
  EncodeMode mode = EncodeMode::Farkas;
  int d = 2;                             // Handelman monoid degree cap
  int y1 = 2, y2 = 2, y3 = 1, y4 = 2;   // Putinar degree caps
};

// One CaseSystem per conclusion atom of the pair.
std::vector<CaseSystem> encode_pair(const ConstraintPair& pair,
                                    const EncodeOptions& opt, EncodeCtx& ctx);

std::string dump_cases(const CaseSystem& cs, const VarTable& vt);

}  // namespace irw
