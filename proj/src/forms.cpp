#include "multavg/forms.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace multavg {

bool AffineForm::primitive() const {
  u64 g = 0;
  for (i64 c : coef) g = std::gcd(g, (u64)(c < 0 ? -c : c));
  return g == 1;
}

std::string FormSystem::str() const {
  std::ostringstream os;
  for (int j = 0; j < k(); j++) {
    if (j) os << "; ";
    const auto& f = forms[j];
    bool first = true;
    for (int i = 0; i < l; i++) {
      i64 c = f.coef[i];
      if (c == 0) continue;
      std::string v = i < (int)vars.size() ? vars[i] : ("x" + std::to_string(i + 1));
      if (first) {
        if (c == -1) os << "-";
        else if (c != 1) os << c;
      } else {
        os << (c > 0 ? "+" : "-");
        i64 a = c < 0 ? -c : c;
        if (a != 1) os << a;
      }
      os << v;
      first = false;
    }
    if (f.cst != 0 || first) {
      if (!first && f.cst > 0) os << "+";
      os << f.cst;
    }
  }
  return os.str();
}

ValidationReport validate_system(const FormSystem& sys) {
  ValidationReport r;
  if (sys.l < 1 || sys.k() < 1) {
    r.message = "empty system";
    return r;
  }
  r.all_primitive = true;
  r.pairwise_independent = true;
  for (const auto& f : sys.forms) {
    if ((int)f.coef.size() != sys.l) {
      r.message = "form arity mismatch";
      return r;
    }
    if (f.degenerate()) r.has_degenerate = true;
    else if (!f.primitive()) r.all_primitive = false;
  }
  if (r.has_degenerate) {
    r.message = "degenerate form (zero homogeneous part)";
    return r;
  }
  // pairwise independence: homogeneous parts of no two forms are parallel
  for (int i = 0; i < sys.k(); i++)
    for (int j = i + 1; j < sys.k(); j++) {
      bool parallel = true;
      const auto& a = sys.forms[i].coef;
      const auto& b = sys.forms[j].coef;
      for (int u = 0; u < sys.l && parallel; u++)
        for (int v = u + 1; v < sys.l; v++)
          if ((i128)a[u] * b[v] != (i128)a[v] * b[u]) { parallel = false; break; }
      if (parallel) r.pairwise_independent = false;
    }
  r.ok = r.all_primitive && r.pairwise_independent;
  if (!r.ok)
    r.message = !r.all_primitive ? "non-primitive form" : "parallel homogeneous parts";
  return r;
}

i64 system_height(const FormSystem& sys) {
  i64 h = 1;
  for (const auto& f : sys.forms) {
    for (i64 c : f.coef) h = std::max(h, c < 0 ? -c : c);
    h = std::max(h, f.cst < 0 ? -f.cst : f.cst);
  }
  return h;
}

// ---- parser -----------------------------------------------------------------

namespace {

struct Parser {
  const std::string& s;
  size_t pos = 0;
  explicit Parser(const std::string& str) : s(str) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace((unsigned char)s[pos])) pos++;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) { pos++; return true; }
    return false;
  }
  bool done() {
    skip_ws();
    return pos >= s.size();
  }
};

}  // namespace

FormSystem parse_system(const std::string& text) {
  FormSystem sys;
  std::vector<std::string> vars;
  struct RawTerm { i64 coef; int var; };  // var = -1 for constants
  std::vector<std::vector<RawTerm>> raw;

  Parser p(text);
  while (!p.done()) {
    std::vector<RawTerm> terms;
    bool expect_term = true;
    while (true) {
      p.skip_ws();
      if (p.pos >= p.s.size() || p.s[p.pos] == ';') break;
      i64 sign = 1;
      while (p.pos < p.s.size() && (p.s[p.pos] == '+' || p.s[p.pos] == '-')) {
        if (p.s[p.pos] == '-') sign = -sign;
        p.pos++;
        p.skip_ws();
      }
      i64 mag = 1;
      bool have_digits = false;
      while (p.pos < p.s.size() && std::isdigit((unsigned char)p.s[p.pos])) {
        if (!have_digits) mag = 0;
        have_digits = true;
        mag = mag * 10 + (p.s[p.pos] - '0');
        if (mag > (i64)1e15) throw std::invalid_argument("parse_system: coefficient too large");
        p.pos++;
      }
      p.skip_ws();
      bool star = false;
      if (have_digits && p.pos < p.s.size() && p.s[p.pos] == '*') {
        star = true;
        p.pos++;
        p.skip_ws();
      }
      std::string name;
      while (p.pos < p.s.size() &&
             (std::isalnum((unsigned char)p.s[p.pos]) || p.s[p.pos] == '_' || p.s[p.pos] == '\'')) {
        if (name.empty() && std::isdigit((unsigned char)p.s[p.pos])) break;
        name.push_back(p.s[p.pos]);
        p.pos++;
      }
      if (name.empty()) {
        if (!have_digits || star)
          throw std::invalid_argument("parse_system: expected term at '" +
                                      text.substr(p.pos) + "'");
        terms.push_back({sign * mag, -1});
      } else {
        int vi = -1;
        for (size_t i = 0; i < vars.size(); i++)
          if (vars[i] == name) vi = (int)i;
        if (vi < 0) { vi = (int)vars.size(); vars.push_back(name); }
        terms.push_back({sign * mag, vi});
      }
      expect_term = false;
    }
    if (expect_term && terms.empty())
      throw std::invalid_argument("parse_system: empty form");
    raw.push_back(std::move(terms));
    if (!p.eat(';')) break;
  }
  if (raw.empty()) throw std::invalid_argument("parse_system: no forms");

  sys.l = (int)vars.size();
  if (sys.l == 0) throw std::invalid_argument("parse_system: no variables");
  sys.vars = vars;
  for (auto& terms : raw) {
    AffineForm f;
    f.coef.assign(sys.l, 0);
    for (auto& t : terms) {
      if (t.var < 0) f.cst += t.coef;
      else f.coef[t.var] += t.coef;
    }
    sys.forms.push_back(f);
  }
  return sys;
}

// ---- Cauchy-Schwarz complexity ---------------------------------------------

namespace {

// rank of the row set via fraction-free elimination
int zrank(std::vector<std::vector<i128>> m) {
  int rows = (int)m.size();
  if (!rows) return 0;
  int cols = (int)m[0].size();
  int r = 0;
  for (int c = 0; c < cols && r < rows; c++) {
    int piv = -1;
    for (int i = r; i < rows; i++)
      if (m[i][c] != 0) { piv = i; break; }
    if (piv < 0) continue;
    std::swap(m[r], m[piv]);
    for (int i = r + 1; i < rows; i++) {
      if (m[i][c] == 0) continue;
      i128 a = m[r][c], b = m[i][c];
      i128 g = gcd_i128(a, b);
      i128 fa = b / g, fb = a / g;
      for (int j = c; j < cols; j++) m[i][j] = m[i][j] * fb - m[r][j] * fa;
    }
    r++;
  }
  return r;
}

bool in_span(const std::vector<const AffineForm*>& cls, const AffineForm& f, int l) {
  if (cls.empty()) return false;  // span of nothing is {0}; forms are nonzero
  std::vector<std::vector<i128>> m;
  for (auto* g : cls) {
    std::vector<i128> row(g->coef.begin(), g->coef.end());
    m.push_back(row);
  }
  int r0 = zrank(m);
  m.push_back(std::vector<i128>(f.coef.begin(), f.coef.end()));
  (void)l;
  return zrank(m) == r0;
}

bool partition_ok(const FormSystem& sys, int j, int s) {
  // try to split the forms other than j into s+1 classes avoiding span capture
  std::vector<int> others;
  for (int i = 0; i < sys.k(); i++)
    if (i != j) others.push_back(i);
  const int n = (int)others.size();
  std::vector<int> assign(n, -1);
  std::vector<std::vector<const AffineForm*>> cls(s + 1);

  // DFS with canonical class order; prune when a class's span captures L_j
  std::function<bool(int)> go = [&](int idx) -> bool {
    if (idx == n) return true;
    int used = 0;
    for (int i = 0; i < idx; i++) used = std::max(used, assign[i] + 1);
    int cap = std::min(s, used);  // first unused class is interchangeable with later ones
    for (int c = 0; c <= cap; c++) {
      cls[c].push_back(&sys.forms[others[idx]]);
      if (!in_span(cls[c], sys.forms[j], sys.l)) {
        assign[idx] = c;
        if (go(idx + 1)) return true;
        assign[idx] = -1;
      }
      cls[c].pop_back();
    }
    return false;
  };
  return go(0);
}

}  // namespace

int cs_complexity(const FormSystem& sys) {
  if (sys.k() > 10) throw std::invalid_argument("cs_complexity: too many forms");
  auto v = validate_system(sys);
  if (!v.ok) throw std::invalid_argument("cs_complexity: " + v.message);
  int worst = 0;
  for (int j = 0; j < sys.k(); j++) {
    int s = 0;
    while (s <= sys.k() && !partition_ok(sys, j, s)) s++;
    if (s > sys.k()) throw std::runtime_error("cs_complexity: no admissible partition");
    worst = std::max(worst, s);
  }
  return worst;
}

// ---- canned systems ---------------------------------------------------------

GowersSystem gowers_system(int k) {
  if (k < 2 || k > 5) throw std::invalid_argument("gowers_system: k in [2,5]");
  GowersSystem g;
  g.system.l = k + 1;
  for (int l = 0; l < k; l++) g.system.vars.push_back("h" + std::to_string(l + 1));
  g.system.vars.push_back("m");
  for (int j = 0; j < (1 << k); j++) {
    AffineForm f;
    f.coef.assign(k + 1, 0);
    f.coef[k] = 1;  // base variable n_{k+1}
    for (int l = 0; l < k; l++)
      if (j >> l & 1) f.coef[l] = 1;
    g.system.forms.push_back(f);
    g.conj_weight.push_back((unsigned)__builtin_popcount((unsigned)j));
  }
  return g;
}

FormSystem ap_system(const std::vector<int>& S) {
  if (S.empty()) throw std::invalid_argument("ap_system: empty S");
  FormSystem sys;
  sys.l = 2;
  sys.vars = {"n", "d"};
  for (int j : S) {
    if (j < 0) throw std::invalid_argument("ap_system: negative step index");
    sys.forms.push_back({{1, j}, 0});
  }
  return sys;
}

FormSystem ap_system2(const std::vector<int>& S, const std::vector<int>& T) {
  if (S.empty() || T.empty()) throw std::invalid_argument("ap_system2: empty index set");
  FormSystem sys;
  sys.l = 3;
  sys.vars = {"n", "n'", "d"};
  for (int j : S) sys.forms.push_back({{1, 0, j}, 0});
  for (int j : T) sys.forms.push_back({{0, 1, j}, 0});
  return sys;
}

// ---- boxes ------------------------------------------------------------------

double BoxSpec::x_minus() const {
  double m = x.empty() ? 0 : x[0];
  for (double v : x) m = std::min(m, v);
  return m;
}

double BoxSpec::x_plus() const {
  double m = x.empty() ? 0 : x[0];
  for (double v : x) m = std::max(m, v);
  return m;
}

double BoxSpec::volume() const {
  double v = 1;
  for (double s : x) v *= s;
  return v;
}

bool BoxSpec::appropriate(i64 A, double B) const {
  if (x.empty()) return false;
  double xm = x_minus(), xp = x_plus();
  if (xm < 3) return false;
  double ll = std::log(std::log((double)(l() + 1) * (double)A * xp));
  return xm > (double)l() * ll * ll * std::pow(std::log(xp), B);
}

BoxSpec BoxSpec::square(double x, int l) {
  BoxSpec b;
  b.x.assign(l, x);
  return b;
}

u64 form_range_max(const FormSystem& sys, const BoxSpec& box) {
  if ((int)box.x.size() != sys.l) throw std::invalid_argument("box arity mismatch");
  u64 best = 1;
  for (const auto& f : sys.forms) {
    // affine extremes are at corners: coordinate i contributes coef*floor(x_i) or coef*1
    i128 mx = f.cst, mn = f.cst;
    for (int i = 0; i < sys.l; i++) {
      i64 hi = (i64)std::floor(box.x[i]);
      if (hi < 1) throw std::invalid_argument("empty box side");
      i128 a = (i128)f.coef[i] * 1, b = (i128)f.coef[i] * hi;
      mx += std::max(a, b);
      mn += std::min(a, b);
    }
    if (mn < 1) throw std::domain_error("form non-positive on box: " + sys.str());
    if (mx > (i128)UINT64_MAX) throw std::overflow_error("form range overflow");
    best = std::max(best, (u64)mx);
  }
  return best;
}

}  // namespace multavg
