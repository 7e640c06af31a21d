#pragma once
#include "irw/poly.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace irw {

using Valuation = std::map<int, Rat>;  // total over the system's variables

struct Diagnostic {
  int line = 0;
  std::string msg;
};

struct TsysError : std::runtime_error {
  std::vector<Diagnostic> diags;
  explicit TsysError(std::vector<Diagnostic> d);
};

struct Transition {
  std::string name;
  int src = -1, dst = -1;
  std::vector<Inequality> guard;       // conjunction; empty = true
  std::map<int, Polynomial> update;    // identity for unmentioned variables
  Polynomial applied(int var, const VarTable& vt) const;  // update as polynomial
};

struct TargetSpec {
  std::vector<Inequality> atoms;  // conjunction over program vars
  bool strong = false;
};

struct TransitionSystem {
  VarTable vt;  // program variables (unknowns may be appended later)
  std::vector<std::string> locations;
  int initial = -1;
  std::vector<Inequality> init;  // conjunction
  std::vector<Transition> transitions;
  std::map<int, TargetSpec> targets;  // by location index

  int loc(const std::string& name) const;  // -1 when absent
  bool in_target(int l, const Valuation& v) const;
  std::vector<std::pair<int, Valuation>> successors(int l, const Valuation& v) const;
  // transition indices out of a location
  std::vector<int> out(int l) const;

  struct Classification {
    int d = 0, k = 0, beta = 0;
  };
  Classification classify() const;

  std::string pretty() const;
};

TransitionSystem parse_tsys(const std::string& text);

// Bundled benchmark systems: fig1, fig2, fig2u, fig3, fig4, sqrt1, sqrt2,
// sum, sum2, robot1, robot2.
std::vector<std::string> corpus_names();
const std::string& corpus_source(const std::string& name);
TransitionSystem builtin(const std::string& name);
// fig3 is parameterized by the loop bound M (the bundled fig3 uses 10^9 + 1).
std::string fig3_source(const std::string& M);

}  // namespace irw
