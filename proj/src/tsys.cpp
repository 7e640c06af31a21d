#include "irw/tsys.hpp"

#include <algorithm>
#include <sstream>

namespace irw {

TsysError::TsysError(std::vector<Diagnostic> d)
    : std::runtime_error(d.empty() ? "parse failed"
                                   : "line " + std::to_string(d[0].line) + ": " + d[0].msg),
      diags(std::move(d)) {}

Polynomial Transition::applied(int var, const VarTable& vt) const {
  auto it = update.find(var);
  return it != update.end() ? it->second : Polynomial::var(VarId{var});
}

int TransitionSystem::loc(const std::string& name) const {
  auto it = std::find(locations.begin(), locations.end(), name);
  return it == locations.end() ? -1 : static_cast<int>(it - locations.begin());
}

bool TransitionSystem::in_target(int l, const Valuation& v) const {
  auto it = targets.find(l);
  if (it == targets.end()) return false;
  for (auto& a : it->second.atoms)
    if (!a.holds(a.lhs.eval(v))) return false;
  return true;
}

std::vector<int> TransitionSystem::out(int l) const {
  std::vector<int> r;
  for (size_t i = 0; i < transitions.size(); ++i)
    if (transitions[i].src == l) r.push_back(static_cast<int>(i));
  return r;
}

std::vector<std::pair<int, Valuation>> TransitionSystem::successors(int l,
                                                                    const Valuation& v) const {
  std::vector<std::pair<int, Valuation>> r;
  for (int ti : out(l)) {
    const Transition& t = transitions[ti];
    bool en = true;
    for (auto& a : t.guard) en = en && a.holds(a.lhs.eval(v));
    if (!en) continue;
    Valuation nv = v;
    for (auto& [var, p] : t.update) nv[var] = p.eval(v);
    r.emplace_back(ti, std::move(nv));
  }
  return r;
}

TransitionSystem::Classification TransitionSystem::classify() const {
  Classification c;
  auto bump_d = [&](const Polynomial& p) { c.d = std::max(c.d, p.total_degree()); };
  for (auto& a : init) bump_d(a.lhs);
  c.k = std::max<int>(c.k, static_cast<int>(init.size()));
  for (auto& t : transitions) {
    for (auto& a : t.guard) bump_d(a.lhs);
    for (auto& [v, p] : t.update) bump_d(p);
    c.k = std::max<int>(c.k, static_cast<int>(t.guard.size()));
  }
  for (auto& [l, tg] : targets) {
    for (auto& a : tg.atoms) bump_d(a.lhs);
    c.k = std::max<int>(c.k, static_cast<int>(tg.atoms.size()));
  }
  for (size_t l = 0; l < locations.size(); ++l)
    c.beta = std::max<int>(c.beta, static_cast<int>(out(static_cast<int>(l)).size()));
  return c;
}

namespace {

struct Stmt {
  int line;
  std::string text;
};

std::vector<Stmt> split_statements(const std::string& text, std::vector<Diagnostic>& diags) {
  std::vector<Stmt> out;
  std::string cur;
  int line = 1, start_line = 1;
  bool comment = false;
  for (char ch : text) {
    if (ch == '\n') {
      ++line;
      comment = false;
      if (cur.find_first_not_of(" \t") == std::string::npos) {
        cur.clear();
        start_line = line;
      } else {
        cur += ' ';
      }
      continue;
    }
    if (comment) continue;
    if (ch == '#') {
      comment = true;
      continue;
    }
    if (ch == ';') {
      std::string t = cur;
      size_t a = t.find_first_not_of(" \t");
      if (a != std::string::npos) out.push_back({start_line, t.substr(a)});
      cur.clear();
      start_line = line;
      continue;
    }
    if (cur.empty() && (ch == ' ' || ch == '\t')) {
      start_line = line;
      continue;
    }
    cur += ch;
  }
  if (cur.find_first_not_of(" \t") != std::string::npos)
    diags.push_back({start_line, "missing ';' at end of statement"});
  return out;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char ch : s) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

// Parse "e1 REL e2" into one or two (for =) normalized atoms.
std::vector<Inequality> parse_atom(const std::string& s, VarTable& vt) {
  static const std::vector<std::pair<std::string, int>> ops = {
      {">=", 0}, {"<=", 1}, {">", 2}, {"<", 3}, {"=", 4}};
  size_t at = std::string::npos;
  int op = -1;
  for (auto& [tok, id] : ops) {
    size_t p = s.find(tok);
    if (p != std::string::npos && (at == std::string::npos || p < at ||
                                   (p == at && tok.size() > ops[op].first.size()))) {
      at = p;
      op = id;
    }
  }
  if (op == -1) throw std::invalid_argument("expected a comparison operator in '" + s + "'");
  Polynomial lhs = parse_poly(s.substr(0, at), vt);
  Polynomial rhs = parse_poly(s.substr(at + ops[op].first.size()), vt);
  switch (op) {
    case 0: return {{lhs - rhs, Rel::Geq}};
    case 1: return {{rhs - lhs, Rel::Geq}};
    case 2: return {{lhs - rhs, Rel::Gt}};
    case 3: return {{rhs - lhs, Rel::Gt}};
    default: return {{lhs - rhs, Rel::Geq}, {rhs - lhs, Rel::Geq}};
  }
}

std::vector<Inequality> parse_atoms(const std::string& s, VarTable& vt) {
  std::vector<Inequality> out;
  for (auto& part : split_commas(s))
    for (auto& a : parse_atom(part, vt)) out.push_back(a);
  return out;
}

}  // namespace

TransitionSystem parse_tsys(const std::string& text) {
  TransitionSystem sys;
  std::vector<Diagnostic> diags;
  auto stmts = split_statements(text, diags);
  bool saw_vars = false;
  std::set<std::string> trans_names;

  for (auto& st : stmts) {
    std::istringstream is(st.text);
    std::string kw;
    is >> kw;
    try {
      if (kw == "vars") {
        saw_vars = true;
        std::string rest;
        std::getline(is, rest);
        auto names = split_commas(rest);
        if (names.empty()) throw std::invalid_argument("empty variable list");
        for (auto& n : names) sys.vt.fresh(n, VarSort::Program);
      } else if (kw == "init") {
        if (!saw_vars) throw std::invalid_argument("'init' before 'vars'");
        std::string rest;
        std::getline(is, rest);
        sys.init = parse_atoms(rest, sys.vt);
      } else if (kw == "loc") {
        std::string name, tag;
        is >> name >> tag;
        if (name.empty()) throw std::invalid_argument("missing location name");
        if (sys.loc(name) >= 0) throw std::invalid_argument("duplicate location '" + name + "'");
        sys.locations.push_back(name);
        if (tag == "initial") {
          if (sys.initial >= 0) throw std::invalid_argument("multiple initial locations");
          sys.initial = static_cast<int>(sys.locations.size()) - 1;
        } else if (!tag.empty()) {
          throw std::invalid_argument("unexpected token '" + tag + "'");
        }
      } else if (kw == "trans") {
        // trans NAME: SRC -> DST [when atoms] [update v := e, ...]
        std::string rest;
        std::getline(is, rest);
        size_t colon = rest.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("expected ':' after name");
        Transition t;
        t.name = trim(rest.substr(0, colon));
        if (t.name.empty() || trans_names.count(t.name))
          throw std::invalid_argument("missing or duplicate transition name");
        trans_names.insert(t.name);
        std::string body = rest.substr(colon + 1);
        size_t arrow = body.find("->");
        if (arrow == std::string::npos) throw std::invalid_argument("expected '->'");
        std::string src = trim(body.substr(0, arrow));
        std::string tail = body.substr(arrow + 2);
        size_t wpos = tail.find(" when ");
        size_t upos = tail.find(" update ");
        size_t end_dst = std::min(wpos == std::string::npos ? tail.size() : wpos,
                                  upos == std::string::npos ? tail.size() : upos);
        std::string dst = trim(tail.substr(0, end_dst));
        t.src = sys.loc(src);
        t.dst = sys.loc(dst);
        if (t.src < 0) throw std::invalid_argument("unknown location '" + src + "'");
        if (t.dst < 0) throw std::invalid_argument("unknown location '" + dst + "'");
        if (wpos != std::string::npos) {
          size_t gend = (upos != std::string::npos && upos > wpos) ? upos : tail.size();
          t.guard = parse_atoms(tail.substr(wpos + 6, gend - wpos - 6), sys.vt);
        }
        if (upos != std::string::npos) {
          for (auto& item : split_commas(tail.substr(upos + 8))) {
            size_t as = item.find(":=");
            if (as == std::string::npos) throw std::invalid_argument("expected ':=' in update");
            std::string vn = trim(item.substr(0, as));
            auto vid = sys.vt.find(vn);
            if (!vid || sys.vt.sort(*vid) != VarSort::Program)
              throw std::invalid_argument("unknown variable '" + vn + "'");
            if (t.update.count(vid->idx))
              throw std::invalid_argument("duplicate update of '" + vn + "'");
            t.update[vid->idx] = parse_poly(item.substr(as + 2), sys.vt);
          }
        }
        sys.transitions.push_back(std::move(t));
      } else if (kw == "target") {
        // target LOC [strong]: atoms
        std::string rest;
        std::getline(is, rest);
        size_t colon = rest.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("expected ':' after location");
        std::string head = trim(rest.substr(0, colon));
        TargetSpec tg;
        std::istringstream hs(head);
        std::string lname, tag;
        hs >> lname >> tag;
        if (tag == "strong")
          tg.strong = true;
        else if (!tag.empty())
          throw std::invalid_argument("unexpected token '" + tag + "'");
        int l = sys.loc(lname);
        if (l < 0) throw std::invalid_argument("unknown location '" + lname + "'");
        if (sys.targets.count(l)) throw std::invalid_argument("duplicate target for '" + lname + "'");
        for (auto& part : split_commas(rest.substr(colon + 1))) {
          auto as = parse_atom(part, sys.vt);
          if (tg.strong && as.size() == 2)
            throw std::invalid_argument("equality atoms are not allowed in strong targets");
          for (auto& a : as) tg.atoms.push_back(a);
        }
        sys.targets[l] = std::move(tg);
      } else {
        throw std::invalid_argument("unknown keyword '" + kw + "'");
      }
    } catch (const std::invalid_argument& e) {
      diags.push_back({st.line, e.what()});
    }
  }

  if (!saw_vars) diags.push_back({1, "missing 'vars' declaration"});
  if (sys.locations.empty()) diags.push_back({1, "no locations declared"});
  if (sys.initial < 0 && !sys.locations.empty())
    diags.push_back({1, "no initial location declared"});
  if (!diags.empty()) throw TsysError(std::move(diags));

  // Every location needs a successor: add identity self-loops where absent.
  for (size_t l = 0; l < sys.locations.size(); ++l)
    if (sys.out(static_cast<int>(l)).empty()) {
      Transition t;
      t.name = "self_" + sys.locations[l];
      t.src = t.dst = static_cast<int>(l);
      sys.transitions.push_back(std::move(t));
    }
  return sys;
}

std::string TransitionSystem::pretty() const {
  std::ostringstream os;
  os << "vars ";
  auto pv = vt.all(VarSort::Program);
  for (size_t i = 0; i < pv.size(); ++i) os << (i ? ", " : "") << vt.name(pv[i]);
  os << ";\n";
  if (!init.empty()) {
    os << "init ";
    for (size_t i = 0; i < init.size(); ++i)
      os << (i ? ", " : "") << init[i].lhs.str(vt) << (init[i].rel == Rel::Gt ? " > 0" : " >= 0");
    os << ";\n";
  }
  for (size_t l = 0; l < locations.size(); ++l)
    os << "loc " << locations[l] << (static_cast<int>(l) == initial ? " initial" : "") << ";\n";
  for (auto& t : transitions) {
    os << "trans " << t.name << ": " << locations[t.src] << " -> " << locations[t.dst];
    if (!t.guard.empty()) {
      os << " when ";
      for (size_t i = 0; i < t.guard.size(); ++i)
        os << (i ? ", " : "") << t.guard[i].lhs.str(vt)
           << (t.guard[i].rel == Rel::Gt ? " > 0" : " >= 0");
    }
    if (!t.update.empty()) {
      os << " update ";
      bool first = true;
      for (auto& [v, p] : t.update) {
        os << (first ? "" : ", ") << vt.name(VarId{v}) << " := " << p.str(vt);
        first = false;
      }
    }
    os << ";\n";
  }
  for (auto& [l, tg] : targets) {
    os << "target " << locations[l] << (tg.strong ? " strong" : "") << ": ";
    for (size_t i = 0; i < tg.atoms.size(); ++i)
      os << (i ? ", " : "") << tg.atoms[i].lhs.str(vt)
         << (tg.atoms[i].rel == Rel::Gt ? " > 0" : " >= 0");
    os << ";\n";
  }
  return os.str();
}

// ------------------------------------------------------------------- corpus

std::string fig3_source(const std::string& M) {
  std::ostringstream os;
  os << "vars a, b, c, d, e;\ninit a = 0;\n";
  os << "loc ha initial;\nloc hb;\nloc hc;\nloc hd;\nloc he;\nloc chk;\nloc end;\n";
  const char* vs[] = {"a", "b", "c", "d", "e"};
  const char* locs[] = {"ha", "hb", "hc", "hd", "he"};
  for (int i = 0; i < 5; ++i) {
    std::string inner = i < 4 ? locs[i + 1] : "chk";
    os << "trans t" << vs[i] << "1: " << locs[i] << " -> " << inner << " when " << M << " - 1 - "
       << vs[i] << " > 0";
    if (i < 4) os << " update " << vs[i + 1] << " := 0";
    os << ";\n";
    std::string outer = i > 0 ? locs[i - 1] : "end";
    os << "trans t" << vs[i] << "2: " << locs[i] << " -> " << outer << " when " << vs[i] << " - "
       << M << " + 1 >= 0";
    if (i > 0) os << " update " << vs[i - 1] << " := " << vs[i - 1] << " + 1";
    os << ";\n";
  }
  os << "trans tchk: chk -> he update e := e + 1;\n";
  os << "target chk: ";
  for (int i = 0; i < 5; ++i) os << (i ? ", " : "") << vs[i] << " - " << M << " + 2 >= 0";
  os << ";\n";
  return os.str();
}

namespace {

const std::map<std::string, std::string>& sources() {
  static const std::map<std::string, std::string> m = {
      {"fig1", R"(vars x, y, z;
init x >= 0, y >= 0, z >= 0;
loc a initial;
loc b;
loc c;
loc d;
trans t1: a -> b when x - y >= 0;
trans t2: a -> c when x - y >= 0;
trans t3: a -> d when y - x > 0;
trans t4: b -> a update x := x + 1, y := y + 2;
trans t5: c -> a update x := x + z, y := y + z, z := z - 1;
target d: -x > 0;
)"},
      {"fig2", R"(vars x, y;
init x - 10 >= 0, y - 10 >= 0;
loc l1 initial;
loc l2;
loc l3;
loc l4;
trans t1: l1 -> l2 when y - x > 0;
trans t2: l1 -> l3 when y - x > 0;
trans t3: l1 -> l4 when x - y >= 0;
trans t4: l2 -> l4 update x := x + 10;
trans t5: l3 -> l4 update x := x + 5;
target l4: x - y - 8 >= 0;
)"},
      {"fig2u", R"(vars x, y;
init x - 10 >= 0, y - 10 >= 0;
loc l1 initial;
loc l2;
loc l3;
loc l4;
trans t1: l1 -> l2 when y - x > 0;
trans t2: l1 -> l3 when y - x > 0;
trans t3: l1 -> l4 when x - y >= 0;
trans t4: l2 -> l4 update x := x + 10;
trans t5: l3 -> l4 update x := x + 5;
target l4: x - y - 4 >= 0;
)"},
      {"fig3", fig3_source("1000000001")},
      {"fig4", R"(vars s, i, n;
init s = 0, i = 0, n >= 0;
loc a initial;
loc b;
loc c;
loc d;
trans t1: a -> b when n - i >= 0;
trans t2: a -> c when n - i >= 0;
trans t3: a -> d when i - n > 0;
trans t4: b -> a update s := s + 1, i := i + 1;
trans t5: c -> a update s := s + 2, i := i + 1;
target d: s - 20 >= 0;
)"},
      {"sqrt1", R"(vars n, s;
init n - 1 >= 0, s = 1;
loc l1 initial;
loc l2;
trans t1: l1 -> l1 when n - (s + 1)^2 >= 0 update s := s + 1;
trans t2: l1 -> l2 when (s + 1)^2 - n > 0;
target l2: n - s - 100000 > 0;
)"},
      {"sqrt2", R"(vars n, s;
init n - 1 >= 0, s = 1;
loc l1 initial;
loc l2;
trans t1: l1 -> l1 when n - (s + 1)^2 >= 0, n - 4*s^2 >= 0 update s := 2*s;
trans t2: l1 -> l1 when n - (s + 1)^2 >= 0, 4*s^2 - n > 0 update s := s + 1;
trans t3: l1 -> l2 when (s + 1)^2 - n > 0;
target l2: n - s - 100000 > 0;
)"},
      {"sum", R"(vars s, i, n;
init s = 0, i = 1;
loc l1 initial;
loc l2;
trans t1: l1 -> l1 when n - i >= 0 update s := s + i, i := i + 1;
trans t2: l1 -> l2 when i - n > 0;
target l2: s - 50005000 >= 0, 60505500 - s >= 0;
)"},
      {"sum2", R"(vars s, i, n;
init s = 0, i = 1;
loc l1 initial;
loc l2;
trans t1: l1 -> l1 when n - i >= 0 update s := s + i^2, i := i + 1;
trans t2: l1 -> l2 when i - n > 0;
target l2: s - 333383335000 >= 0, 443727168500 - s >= 0;
)"},
      {"robot1", R"(vars x1, y1, x2, y2;
init x1 - x2 = 0, y1 - y2 = 0;
loc l1 initial;
loc m;
loc l2;
trans t1: l1 -> m when 100000 - (x1 - x2)^2 - (y1 - y2)^2 >= 0 update x1 := x1 + 1;
trans t2: l1 -> m when 100000 - (x1 - x2)^2 - (y1 - y2)^2 >= 0 update y1 := y1 + 1;
trans t3: l1 -> l2 when (x1 - x2)^2 + (y1 - y2)^2 - 100000 > 0;
trans t4: m -> l1 update x2 := x2 + 1;
trans t5: m -> l1 update y2 := y2 + 1;
target l2: 1 >= 0;
)"},
      {"robot2", R"(vars x1, y1, x2, y2;
init y1 - y2 - 10000 = 0, x1 - x2 + 10000 = 0;
loc l1 initial;
loc m;
loc l2;
trans t1: l1 -> m when (x1 - x2)^2 + (y1 - y2)^2 - 100 >= 0 update x1 := x1 + 1;
trans t2: l1 -> m when (x1 - x2)^2 + (y1 - y2)^2 - 100 >= 0 update y1 := y1 + 1;
trans t3: l1 -> l2 when 100 - (x1 - x2)^2 - (y1 - y2)^2 > 0;
trans t4: m -> l1 update x2 := x2 + 1;
trans t5: m -> l1 update y2 := y2 + 1;
target l2: 1 >= 0;
)"},
  };
  return m;
}

}  // namespace

std::vector<std::string> corpus_names() {
  std::vector<std::string> out;
  for (auto& [k, v] : sources()) out.push_back(k);
  return out;
}

const std::string& corpus_source(const std::string& name) {
  auto& m = sources();
  auto it = m.find(name);
  if (it == m.end()) throw std::invalid_argument("unknown builtin system: " + name);
  return it->second;
}

TransitionSystem builtin(const std::string& name) { return parse_tsys(corpus_source(name)); }

}  // namespace irw
