#include "irw/templates.hpp"

#include <stdexcept>
#include <string>

namespace irw {

TemplateSet make_templates(TransitionSystem& sys, TemplateMode mode, int k,
                           int degree) {
  if (k < 1) throw std::invalid_argument("make_templates: k must be >= 1");
  const int d = (mode == TemplateMode::Linear) ? 1 : degree;
  if (d < 1) throw std::invalid_argument("make_templates: degree must be >= 1");

  TemplateSet ts;
  ts.mode = mode;
  ts.degree = d;
  ts.k = k;

  const auto pv = sys.vt.all(VarSort::Program);
  const auto monos = monomials_up_to(pv, d);
  const int L = static_cast<int>(sys.locations.size());
  ts.A.resize(L);
  ts.f.resize(L);

  int c = 0;
  for (int l = 0; l < L; ++l) {
    for (int i = 0; i < k; ++i) {
      Polynomial p;
      for (const auto& m : monos) {
        VarId u = sys.vt.fresh("c" + std::to_string(c++), VarSort::Unknown);
        ts.unknowns.push_back(u);
        p.add_term(m * Monomial{{{u.idx, 1}}}, Rat(1));
      }
      ts.A[l].push_back(Inequality{p, Rel::Geq});
    }
  }
  int dd = 0;
  for (int l = 0; l < L; ++l) {
    Polynomial p;
    for (const auto& m : monos) {
      VarId u = sys.vt.fresh("d" + std::to_string(dd++), VarSort::Unknown);
      ts.unknowns.push_back(u);
      p.add_term(m * Monomial{{{u.idx, 1}}}, Rat(1));
    }
    ts.f[l] = p;
  }
  ts.eps = sys.vt.fresh("eps", VarSort::Unknown);
  ts.unknowns.push_back(ts.eps);
  return ts;
}

}  // namespace irw
