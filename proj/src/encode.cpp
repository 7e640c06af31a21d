#include "irw/encode.hpp"

#include <sstream>
#include <stdexcept>

namespace irw {

namespace {

int unknown_degree(const std::vector<Inequality>& atoms, const VarTable& vt) {
  int d = 0;
  for (const auto& a : atoms) d = std::max(d, a.lhs.total_degree());
  (void)vt;
  return d;
}

bool is_minus_one(const Inequality& a) {
  return a.rel == Rel::Geq && a.lhs == Polynomial(Rat(-1));
}

// Fresh multipliers y_0..y_m (>= 0) plus the coefficient matching of
// `target` against y_0 + sum y_i * premise_i. When `strict_sum` is set, the
// strict-multiplier positivity atom is appended (0 > 0 when no premise atom
// is strict, making the alternative vacuous).
CaseBlock combination_block(const ConstraintPair& pair,
                            const Polynomial& target, CaseTag tag,
                            bool strict_sum, EncodeCtx& ctx,
                            std::vector<VarId>& fresh) {
  CaseBlock blk;
  blk.tag = tag;
  std::vector<VarId> ys;
  for (size_t i = 0; i <= pair.premise.size(); ++i) {
    VarId y = ctx.fresh("y");
    ys.push_back(y);
    fresh.push_back(y);
    blk.constraints.push_back(Inequality{Polynomial::var(y), Rel::Geq});
  }
  Polynomial rhs = Polynomial::var(ys[0]);
  for (size_t i = 0; i < pair.premise.size(); ++i)
    rhs = rhs + Polynomial::var(ys[i + 1]) * pair.premise[i].lhs;
  for (auto& eq : match_coefficients(target, rhs, ctx.vt()))
    blk.constraints.push_back(std::move(eq));
  if (strict_sum) {
    Polynomial s;
    for (size_t i = 0; i < pair.premise.size(); ++i)
      if (pair.premise[i].rel == Rel::Gt)
        s = s + Polynomial::var(ys[i + 1]);
    blk.constraints.push_back(Inequality{s, Rel::Gt});
  }
  return blk;
}

void require_affine_premise(const ConstraintPair& pair, const VarTable& vt) {
  for (const auto& a : pair.premise)
    if (a.lhs.degree_in_sort(vt, VarSort::Program) > 1)
      throw std::invalid_argument(
          "affine encoding applied to a non-affine premise atom");
}

const Inequality& conclusion_atom(const ConstraintPair& pair, int idx) {
  return pair.conclusion.at(static_cast<size_t>(idx));
}

}  // namespace

VarId EncodeCtx::fresh(const std::string& prefix, VarSort sort) {
  int& n = next_[prefix];
  for (;;) {
    std::string name = prefix + std::to_string(n++);
    if (!vt_.find(name)) return vt_.fresh(name, sort);
  }
}

std::vector<Inequality> match_coefficients(const Polynomial& lhs,
                                           const Polynomial& rhs,
                                           const VarTable& vt) {
  std::vector<Inequality> eqs;
  for (auto& [mono, coeff] : collect_by_program_monomials(lhs - rhs, vt)) {
    if (coeff.is_zero()) continue;
    eqs.push_back(Inequality{coeff, Rel::Eq});
  }
  return eqs;
}

CaseSystem farkas_cases(const ConstraintPair& pair, EncodeCtx& ctx,
                        int conclusion) {
  require_affine_premise(pair, ctx.vt());
  const Inequality& rho = conclusion_atom(pair, conclusion);
  if (rho.rel != Rel::Geq)
    throw std::invalid_argument(
        "affine encoding requires a non-strict conclusion atom");
  if (rho.lhs.degree_in_sort(ctx.vt(), VarSort::Program) > 1)
    throw std::invalid_argument(
        "affine encoding applied to a non-affine conclusion atom");

  CaseSystem cs;
  cs.pair_loc = pair.loc;
  cs.pair_disjunct = pair.disjunct;
  cs.conclusion_index = conclusion;
  if (!is_minus_one(rho))
    cs.cases.push_back(combination_block(pair, rho.lhs, CaseTag::Combination,
                                         false, ctx, cs.fresh));
  cs.cases.push_back(combination_block(pair, Polynomial(Rat(-1)),
                                       CaseTag::MinusOne, false, ctx,
                                       cs.fresh));
  cs.cases.push_back(combination_block(pair, Polynomial(), CaseTag::ZeroStrict,
                                       true, ctx, cs.fresh));
  for (const auto& blk : cs.cases)
    cs.max_degree =
        std::max(cs.max_degree, unknown_degree(blk.constraints, ctx.vt()));
  return cs;
}

std::vector<Polynomial> monoid_up_to(const std::vector<Inequality>& lambda,
                                     int d) {
  std::vector<const Polynomial*> factors;
  for (const auto& a : lambda)
    if (a.lhs.total_degree() >= 1) factors.push_back(&a.lhs);
  std::vector<Polynomial> out;
  // Non-decreasing index tuples, enumerated by length then lexicographically.
  std::vector<std::pair<Polynomial, int>> level{{Polynomial(Rat(1)), 0}};
  out.push_back(Polynomial(Rat(1)));
  for (int len = 1; len <= d && !level.empty(); ++len) {
    std::vector<std::pair<Polynomial, int>> next;
    for (const auto& [prod, start] : level)
      for (int i = start; i < static_cast<int>(factors.size()); ++i) {
        Polynomial q = prod * (*factors[i]);
        out.push_back(q);
        next.emplace_back(std::move(q), i);
      }
    level = std::move(next);
  }
  return out;
}

CaseSystem handelman_cases(const ConstraintPair& pair, int d, EncodeCtx& ctx,
                           int conclusion) {
  require_affine_premise(pair, ctx.vt());
  const Inequality& rho = conclusion_atom(pair, conclusion);
  if (rho.rel != Rel::Strong)
    throw std::invalid_argument(
        "monoid-combination encoding requires a strong conclusion atom");

  CaseSystem cs;
  cs.pair_loc = pair.loc;
  cs.pair_disjunct = pair.disjunct;
  cs.conclusion_index = conclusion;

  CaseBlock blk;
  blk.tag = CaseTag::Handelman;
  auto monoid = monoid_up_to(pair.premise, d);
  VarId y0 = ctx.fresh("y");
  cs.fresh.push_back(y0);
  blk.constraints.push_back(Inequality{Polynomial::var(y0), Rel::Gt});
  Polynomial rhs = Polynomial::var(y0);
  for (const auto& h : monoid) {
    VarId y = ctx.fresh("y");
    cs.fresh.push_back(y);
    blk.constraints.push_back(Inequality{Polynomial::var(y), Rel::Geq});
    rhs = rhs + Polynomial::var(y) * h;
  }
  for (auto& eq : match_coefficients(rho.lhs, rhs, ctx.vt()))
    blk.constraints.push_back(std::move(eq));
  cs.cases.push_back(std::move(blk));

  cs.cases.push_back(combination_block(pair, Polynomial(Rat(-1)),
                                       CaseTag::MinusOne, false, ctx,
                                       cs.fresh));
  cs.cases.push_back(combination_block(pair, Polynomial(), CaseTag::ZeroStrict,
                                       true, ctx, cs.fresh));
  for (const auto& b : cs.cases)
    cs.max_degree =
        std::max(cs.max_degree, unknown_degree(b.constraints, ctx.vt()));
  return cs;
}

SosTemplate sos_template(const std::vector<VarId>& vars, int d,
                         EncodeCtx& ctx) {
  SosTemplate t;
  t.deg = (d < 0 ? 0 : d) + ((d % 2 != 0) ? 1 : 0);
  auto hmonos = monomials_up_to(vars, t.deg);
  for (const auto& m : hmonos) {
    VarId e = ctx.fresh("eta");
    t.etas.push_back(e);
    t.h.add_term(m * Monomial{{{e.idx, 1}}}, Rat(1));
  }
  auto y = monomials_up_to(vars, t.deg / 2);
  t.dim = static_cast<int>(y.size());
  // Row-major lower-triangular entries; diagonal entries are non-negative.
  std::vector<std::vector<VarId>> L(t.dim);
  for (int r = 0; r < t.dim; ++r)
    for (int c = 0; c <= r; ++c) {
      VarId l = ctx.fresh("l");
      t.ls.push_back(l);
      L[r].push_back(l);
      if (c == r)
        t.constraints.push_back(Inequality{Polynomial::var(l), Rel::Geq});
    }
  // y^T L L^T y = sum_{r,s} (sum_{c <= min(r,s)} L[r][c]*L[s][c]) y_r y_s.
  Polynomial expansion;
  for (int r = 0; r < t.dim; ++r)
    for (int s = 0; s < t.dim; ++s) {
      Polynomial entry;
      for (int c = 0; c <= std::min(r, s); ++c)
        entry = entry + Polynomial::var(L[r][c]) * Polynomial::var(L[s][c]);
      Polynomial term;
      term.add_term(y[r] * y[s], Rat(1));
      expansion = expansion + entry * term;
    }
  for (auto& eq : match_coefficients(t.h, expansion, ctx.vt()))
    t.constraints.push_back(std::move(eq));
  return t;
}

CaseSystem putinar_cases(const ConstraintPair& pair, int y1, int y2, int y3,
                         int y4, EncodeCtx& ctx, int conclusion) {
  const Inequality& rho = conclusion_atom(pair, conclusion);
  if (rho.rel != Rel::Strong)
    throw std::invalid_argument(
        "positivstellensatz encoding requires a strong conclusion atom");
  const int m = static_cast<int>(pair.premise.size());
  std::vector<VarId> pv = ctx.vt().all(VarSort::Program);

  CaseSystem cs;
  cs.pair_loc = pair.loc;
  cs.pair_disjunct = pair.disjunct;
  cs.conclusion_index = conclusion;

  auto sos_combination = [&](const Polynomial& target, CaseTag tag, int cap) {
    CaseBlock blk;
    blk.tag = tag;
    VarId yy = ctx.fresh("y");
    cs.fresh.push_back(yy);
    blk.constraints.push_back(Inequality{Polynomial::var(yy), Rel::Gt});
    Polynomial rhs = Polynomial::var(yy);
    for (int i = 0; i <= m; ++i) {
      SosTemplate h = sos_template(pv, cap, ctx);
      cs.fresh.insert(cs.fresh.end(), h.etas.begin(), h.etas.end());
      cs.fresh.insert(cs.fresh.end(), h.ls.begin(), h.ls.end());
      for (auto& c : h.constraints) blk.constraints.push_back(std::move(c));
      rhs = rhs + (i == 0 ? h.h : h.h * pair.premise[i - 1].lhs);
    }
    for (auto& eq : match_coefficients(target, rhs, ctx.vt()))
      blk.constraints.push_back(std::move(eq));
    return blk;
  };

  // (i) refutation: -1 = y0 + h0 + sum h_i g_i with SOS h_i.
  cs.cases.push_back(
      sos_combination(Polynomial(Rat(-1)), CaseTag::MinusOne, y1));

  // (ii) square-slack refutation, one alternative per strict premise atom.
  std::vector<int> stricts;
  for (int i = 0; i < m; ++i)
    if (pair.premise[i].rel == Rel::Gt) stricts.push_back(i);
  if (!stricts.empty()) {
    std::vector<VarId> w;
    std::vector<VarId> ext = pv;
    for (int i = 0; i < m; ++i) {
      VarId wi = ctx.fresh("w", VarSort::Program);
      w.push_back(wi);
      ext.push_back(wi);
      cs.fresh.push_back(wi);
    }
    std::vector<Polynomial> h(m);
    auto monos = monomials_up_to(ext, y2);
    for (int i = 0; i < m; ++i)
      for (const auto& mo : monos) {
        VarId e = ctx.fresh("eta");
        cs.fresh.push_back(e);
        h[i].add_term(mo * Monomial{{{e.idx, 1}}}, Rat(1));
      }
    Polynomial rhs;
    for (int i = 0; i < m; ++i)
      rhs = rhs + h[i] * (pair.premise[i].lhs - Polynomial::var(w[i], 2));
    for (int j : stricts) {
      CaseBlock blk;
      blk.tag = CaseTag::NullCase;
      blk.strict_index = j;
      Polynomial lhs = Polynomial::var(w[j], 2 * y3);
      for (auto& eq : match_coefficients(lhs, rhs, ctx.vt()))
        blk.constraints.push_back(std::move(eq));
      cs.cases.push_back(std::move(blk));
    }
  }

  // (iii) conclusion as y0 + h0 + sum h_i g_i with SOS h_i.
  cs.cases.push_back(sos_combination(rho.lhs, CaseTag::Putinar, y4));

  for (const auto& b : cs.cases)
    cs.max_degree =
        std::max(cs.max_degree, unknown_degree(b.constraints, ctx.vt()));
  return cs;
}

std::vector<CaseSystem> encode_pair(const ConstraintPair& pair,
                                    const EncodeOptions& opt, EncodeCtx& ctx) {
  std::vector<CaseSystem> out;
  for (int q = 0; q < static_cast<int>(pair.conclusion.size()); ++q) {
    switch (opt.mode) {
      case EncodeMode::Farkas:
        out.push_back(farkas_cases(pair, ctx, q));
        break;
      case EncodeMode::Handelman:
        out.push_back(handelman_cases(pair, opt.d, ctx, q));
        break;
      case EncodeMode::Putinar:
        out.push_back(
            putinar_cases(pair, opt.y1, opt.y2, opt.y3, opt.y4, ctx, q));
        break;
    }
  }
  return out;
}

std::string dump_cases(const CaseSystem& cs, const VarTable& vt) {
  static const char* names[] = {"combination", "minus-one", "zero-strict",
                                "handelman",   "putinar",   "null-case"};
  std::ostringstream os;
  os << "obligation loc=" << cs.pair_loc << " disjunct=" << cs.pair_disjunct
     << " conclusion=" << cs.conclusion_index
     << " max-degree=" << cs.max_degree << '\n';
  for (const auto& blk : cs.cases) {
    os << "  case " << names[static_cast<int>(blk.tag)];
    if (blk.strict_index >= 0) os << " j=" << blk.strict_index;
    os << '\n';
    for (const auto& a : blk.constraints) os << "    " << a.str(vt) << '\n';
  }
  return os.str();
}

}  // namespace irw
