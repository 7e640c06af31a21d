#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "irw/templates.hpp"

#include <random>

using namespace irw;

namespace {

// Coefficient (a polynomial over unknowns) of the given program-variable
// monomial in p.
Polynomial coeff_of(const Polynomial& p, const VarTable& vt,
                    const Monomial& m) {
  auto parts = collect_by_program_monomials(p, vt);
  auto it = parts.find(m);
  return it == parts.end() ? Polynomial() : it->second;
}

Monomial mono1() { return Monomial{}; }
Monomial mono(VarId v, int e = 1) { return Monomial{{{v.idx, e}}}; }

}  // namespace

TEST_CASE("two-variable four-location linear templates: counts and naming") {
  auto sys = builtin("fig2");
  auto ts = make_templates(sys, TemplateMode::Linear, 2);
  // 4 locations * 2 conjuncts * 3 coefficients, 4 * 3 rank coefficients, eps.
  CHECK(ts.unknowns.size() == 24 + 12 + 1);
  CHECK(ts.A.size() == 4);
  CHECK(ts.f.size() == 4);
  CHECK(sys.vt.name(ts.unknowns[0]) == "c0");
  CHECK(sys.vt.name(ts.unknowns[23]) == "c23");
  CHECK(sys.vt.name(ts.unknowns[24]) == "d0");
  CHECK(sys.vt.name(ts.unknowns[35]) == "d11");
  CHECK(sys.vt.name(ts.eps) == "eps");
  CHECK(sys.vt.sort(ts.eps) == VarSort::Unknown);

  VarId x = *sys.vt.find("x"), y = *sys.vt.find("y");
  // Location 1, first conjunct: c0 + c1*x + c2*y >= 0.
  const Polynomial& a00 = ts.A[0][0].lhs;
  CHECK(ts.A[0][0].rel == Rel::Geq);
  CHECK(coeff_of(a00, sys.vt, mono1()) == Polynomial::var(*sys.vt.find("c0")));
  CHECK(coeff_of(a00, sys.vt, mono(x)) == Polynomial::var(*sys.vt.find("c1")));
  CHECK(coeff_of(a00, sys.vt, mono(y)) == Polynomial::var(*sys.vt.find("c2")));
  // Location 3 starts at c12; location 4 at c18.
  CHECK(coeff_of(ts.A[2][0].lhs, sys.vt, mono1()) ==
        Polynomial::var(*sys.vt.find("c12")));
  CHECK(coeff_of(ts.A[3][1].lhs, sys.vt, mono(y)) ==
        Polynomial::var(*sys.vt.find("c23")));
  // Rank templates: f3 = d6 + d7*x + d8*y, f4 = d9 + d10*x + d11*y.
  CHECK(coeff_of(ts.f[2], sys.vt, mono(x)) ==
        Polynomial::var(*sys.vt.find("d7")));
  CHECK(coeff_of(ts.f[3], sys.vt, mono1()) ==
        Polynomial::var(*sys.vt.find("d9")));
  CHECK(coeff_of(ts.f[3], sys.vt, mono(y)) ==
        Polynomial::var(*sys.vt.find("d11")));
}

TEST_CASE("single location, single variable, k=1: five unknowns") {
  auto sys = parse_tsys("vars x; init x >= 0; loc l initial;");
  auto ts = make_templates(sys, TemplateMode::Linear, 1);
  CHECK(ts.unknowns.size() == 5);  // 2 set + 2 rank + eps
  CHECK(ts.A[0].size() == 1);
}

TEST_CASE("degree-2 polynomial templates") {
  auto sys = builtin("fig2");
  auto ts = make_templates(sys, TemplateMode::Poly, 2, 2);
  // u = |{1, x, y, x^2, x*y, y^2}| = 6: 4*2*6 + 4*6 + 1 = 73.
  CHECK(ts.unknowns.size() == 73);
  VarId x = *sys.vt.find("x"), y = *sys.vt.find("y");
  auto monos = monomials_up_to({x, y}, 2);
  CHECK(monos.size() == 6);
  for (int l = 0; l < 4; ++l)
    for (int i = 0; i < 2; ++i) {
      auto parts = collect_by_program_monomials(ts.A[l][i].lhs, sys.vt);
      CHECK(parts.size() == 6);
      for (const auto& m : monos) {
        REQUIRE(parts.count(m) == 1);
        // Each coefficient is a single fresh unknown.
        CHECK(parts.at(m).total_degree() == 1);
      }
    }
  CHECK(ts.f[0].total_degree() == 3);  // degree-2 monomial times its unknown
  CHECK(ts.f[0].degree_in_sort(sys.vt, VarSort::Program) == 2);
  CHECK(ts.f[0].degree_in_sort(sys.vt, VarSort::Unknown) == 1);
}

TEST_CASE("deterministic naming across runs") {
  auto s1 = builtin("fig4");
  auto s2 = builtin("fig4");
  auto t1 = make_templates(s1, TemplateMode::Poly, 2, 2);
  auto t2 = make_templates(s2, TemplateMode::Poly, 2, 2);
  REQUIRE(t1.unknowns.size() == t2.unknowns.size());
  for (size_t i = 0; i < t1.unknowns.size(); ++i)
    CHECK(s1.vt.name(t1.unknowns[i]) == s2.vt.name(t2.unknowns[i]));
  for (size_t l = 0; l < t1.A.size(); ++l) {
    CHECK(t1.f[l].str(s1.vt) == t2.f[l].str(s2.vt));
    for (int i = 0; i < t1.k; ++i)
      CHECK(t1.A[l][i].str(s1.vt) == t2.A[l][i].str(s2.vt));
  }
}

TEST_CASE("instantiation yields program-variable polynomials of bounded degree") {
  auto sys = builtin("sqrt1");
  auto ts = make_templates(sys, TemplateMode::Poly, 2, 3);
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> coef(-5, 5);
  std::map<int, Polynomial> assign;
  for (VarId u : ts.unknowns) assign[u.idx] = Polynomial(Rat(coef(rng)));
  for (size_t l = 0; l < ts.A.size(); ++l) {
    Polynomial f = ts.f[l].substitute(assign);
    CHECK(!f.uses_sort(sys.vt, VarSort::Unknown));
    CHECK(f.total_degree() <= 3);
    for (const auto& a : ts.A[l]) {
      Polynomial g = a.lhs.substitute(assign);
      CHECK(!g.uses_sort(sys.vt, VarSort::Unknown));
      CHECK(g.total_degree() <= 3);
    }
  }
}

TEST_CASE("parameter validation") {
  auto sys = builtin("fig2");
  CHECK_THROWS_AS(make_templates(sys, TemplateMode::Linear, 0),
                  std::invalid_argument);
  auto sys2 = builtin("fig2");
  CHECK_THROWS_AS(make_templates(sys2, TemplateMode::Poly, 1, 0),
                  std::invalid_argument);
}
