#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "irw/tsys.hpp"

#include <random>

using namespace irw;

namespace {
Valuation val(const TransitionSystem& s, std::vector<std::pair<std::string, Rat>> kv) {
  Valuation v;
  for (auto& [n, q] : kv) v[s.vt.find(n)->idx] = q;
  return v;
}
}  // namespace

TEST_CASE("fig2 parses to 4 locations, 6 transitions, 2-linear") {
  auto s = builtin("fig2");
  CHECK(s.locations.size() == 4);
  CHECK(s.transitions.size() == 6);  // t1..t5 plus implicit self-loop at l4
  CHECK(s.transitions.back().name == "self_l4");
  CHECK(s.transitions.back().src == s.loc("l4"));
  CHECK(s.vt.all(VarSort::Program).size() == 2);
  auto c = s.classify();
  CHECK(c.d == 1);
  CHECK(c.k == 2);
  CHECK(c.beta == 3);
}

TEST_CASE("fig1 successors match the worked examples") {
  auto s = builtin("fig1");
  auto succ = s.successors(s.loc("a"), val(s, {{"x", 1}, {"y", 1}, {"z", 2}}));
  // x >= y enables t1 (to b) and t2 (to c); t3 needs y > x.
  REQUIRE(succ.size() == 2);
  CHECK(s.transitions[succ[0].first].name == "t1");
  CHECK(succ[0].second == val(s, {{"x", 1}, {"y", 1}, {"z", 2}}));
  CHECK(s.locations[s.transitions[succ[0].first].dst] == "b");
  auto succ_b = s.successors(s.loc("b"), val(s, {{"x", 1}, {"y", 1}, {"z", 2}}));
  REQUIRE(succ_b.size() == 1);
  CHECK(succ_b[0].second == val(s, {{"x", 2}, {"y", 3}, {"z", 2}}));
  CHECK(s.locations[s.transitions[succ_b[0].first].dst] == "a");
  // (x,y,z) := (x+z, y+z, z-1) via t5
  auto succ_c = s.successors(s.loc("c"), val(s, {{"x", 0}, {"y", 0}, {"z", -1}}));
  REQUIRE(succ_c.size() == 1);
  CHECK(succ_c[0].second == val(s, {{"x", -1}, {"y", -1}, {"z", -2}}));
}

TEST_CASE("fig2 successors from (l1,(11,12))") {
  auto s = builtin("fig2");
  auto succ = s.successors(s.loc("l1"), val(s, {{"x", 11}, {"y", 12}}));
  REQUIRE(succ.size() == 2);
  CHECK(s.locations[s.transitions[succ[0].first].dst] == "l2");
  CHECK(s.locations[s.transitions[succ[1].first].dst] == "l3");
  auto succ2 = s.successors(s.loc("l2"), val(s, {{"x", 11}, {"y", 12}}));
  REQUIRE(succ2.size() == 1);
  CHECK(succ2[0].second == val(s, {{"x", 21}, {"y", 12}}));
}

TEST_CASE("target membership") {
  auto s = builtin("fig1");
  CHECK(s.in_target(s.loc("d"), val(s, {{"x", Rat(-1, 2)}, {"y", 0}, {"z", 0}})));
  CHECK(!s.in_target(s.loc("d"), val(s, {{"x", 0}, {"y", 0}, {"z", 0}})));
  CHECK(!s.in_target(s.loc("a"), val(s, {{"x", -1}, {"y", 0}, {"z", 0}})));
  auto f4 = builtin("fig4");
  CHECK(f4.in_target(f4.loc("d"), val(f4, {{"s", 20}, {"i", 0}, {"n", 0}})));
  CHECK(f4.targets.at(f4.loc("d")).atoms.size() == 1);
}

TEST_CASE("parse errors carry line numbers") {
  CHECK_THROWS_AS(parse_tsys("vars ;\nloc a initial;"), TsysError);
  CHECK_THROWS_AS(parse_tsys("vars x;\nloc a initial;\nloc a;"), TsysError);
  CHECK_THROWS_AS(parse_tsys("vars x;\nloc a initial;\ntrans t: a -> nowhere;"), TsysError);
  CHECK_THROWS_AS(parse_tsys("vars x;\ninit q >= 0;\nloc a initial;"), TsysError);
  try {
    parse_tsys("vars x;\nloc a initial;\nloc a;");
  } catch (const TsysError& e) {
    REQUIRE(e.diags.size() == 1);
    CHECK(e.diags[0].line == 3);
  }
  // no initial location
  CHECK_THROWS_AS(parse_tsys("vars x;\nloc a;"), TsysError);
}

TEST_CASE("equalities split into paired inequalities") {
  auto s = builtin("fig4");  // init s = 0, i = 0, n >= 0
  CHECK(s.init.size() == 5);
  int eq_pairs = 0;
  for (auto& a : s.init) CHECK(a.rel == Rel::Geq);
  (void)eq_pairs;
}

TEST_CASE("pretty-print then parse is a fixpoint") {
  for (auto& name : corpus_names()) {
    auto s = builtin(name);
    std::string p1 = s.pretty();
    auto s2 = parse_tsys(p1);
    CHECK(s2.pretty() == p1);
  }
}

TEST_CASE("successors agree with a direct interpreter on random states") {
  std::mt19937_64 rng(23);
  for (auto& name : corpus_names()) {
    auto s = builtin(name);
    auto pv = s.vt.all(VarSort::Program);
    for (int it = 0; it < 1000; ++it) {
      int l = static_cast<int>(rng() % s.locations.size());
      Valuation v;
      for (auto vid : pv) v[vid.idx] = Rat(static_cast<int>(rng() % 41) - 20);
      auto succ = s.successors(l, v);
      // Direct interpretation: walk every transition manually.
      size_t count = 0;
      for (size_t ti = 0; ti < s.transitions.size(); ++ti) {
        auto& t = s.transitions[ti];
        if (t.src != l) continue;
        bool en = true;
        for (auto& g : t.guard) en = en && g.holds(g.lhs.eval(v));
        if (!en) continue;
        Valuation nv = v;
        for (auto& [var, p] : t.update) nv[var] = p.eval(v);
        REQUIRE(count < succ.size());
        CHECK(succ[count].first == static_cast<int>(ti));
        CHECK(succ[count].second == nv);
        ++count;
      }
      CHECK(count == succ.size());
    }
    // every location has at least one outgoing transition
    for (size_t l = 0; l < s.locations.size(); ++l) CHECK(!s.out(static_cast<int>(l)).empty());
  }
}

TEST_CASE("corpus classifications") {
  auto c1 = builtin("fig1").classify();
  CHECK(c1.d == 1);
  CHECK(c1.k == 3);
  CHECK(c1.beta == 3);
  auto c3 = builtin("fig3").classify();
  CHECK(c3.d == 1);
  CHECK(c3.beta == 2);
  auto cs = builtin("sqrt1").classify();
  CHECK(cs.d == 2);
  auto cr = builtin("robot1").classify();
  CHECK(cr.d == 2);
  CHECK(cr.beta == 3);
  // fig3 with M = 4 still builds the 5-nested structure
  auto f3 = parse_tsys(fig3_source("4"));
  CHECK(f3.locations.size() == 7);
  CHECK(f3.transitions.size() == 12);  // 11 + implicit self-loop at end
}

TEST_CASE("strong targets and strict guards") {
  auto s = parse_tsys(
      "vars x;\nloc a initial;\nloc b;\ntrans t: a -> b when x > 0;\ntarget b strong: x >= 1;");
  CHECK(s.targets.at(s.loc("b")).strong);
  CHECK(s.targets.at(s.loc("b")).atoms[0].rel == Rel::Geq);
  CHECK_THROWS_AS(
      parse_tsys("vars x;\nloc a initial;\ntarget a strong: x = 1;"), TsysError);
}
