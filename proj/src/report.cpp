// JSON and CSV emission. All numeric formatting funnels through fmt12 so two
// runs with the same config produce identical bytes apart from wall_ms values.

#include "multavg/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace multavg {

std::string fmt12(double v) {
  if (v == 0.0) v = 0.0;  // collapse negative zero
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

ojson cnum(cplx v) {
  ojson o;
  o["re"] = fmt12(v.real());
  o["im"] = fmt12(v.imag());
  return o;
}

ojson tagged(double v, const char* provenance) {
  ojson o;
  o["value"] = fmt12(v);
  o["provenance"] = provenance;
  return o;
}

ojson tagged_c(cplx v, const char* provenance) {
  ojson o;
  o["value"] = cnum(v);
  o["provenance"] = provenance;
  return o;
}

ojson average_json(const AverageResult& r) {
  ojson o;
  o["value"] = tagged_c(r.value, "empirical");
  o["samples"] = r.samples;
  o["partition"] = r.partition;
  o["run"] = r.provenance;
  o["wall_ms"] = fmt12(r.wall_ms);
  return o;
}

ojson gowers_json(const GowersResult& r) {
  ojson o;
  o["k"] = r.k;
  o["x"] = r.x;
  o["N"] = r.N;
  o["method"] = r.method;
  o["value"] = tagged(r.value, "empirical");
  o["raw"] = tagged(r.raw, "empirical");
  o["raw_one"] = tagged(r.raw_one, "empirical");
  return o;
}

ojson compare_json(const CompareResult& r) {
  ojson o;
  switch (r.verdict) {
    case CompareResult::Verdict::pass: o["verdict"] = "pass"; break;
    case CompareResult::Verdict::fail: o["verdict"] = "fail"; break;
    case CompareResult::Verdict::inconclusive: o["verdict"] = "inconclusive"; break;
  }
  o["diff"] = tagged(r.diff, "empirical");
  o["budget"] = tagged(r.budget, "budget");
  o["multiplier"] = fmt12(r.multiplier);
  o["detail"] = r.detail;
  return o;
}

ojson main_term_json(const MainTermReport& r) {
  ojson o;
  o["assembled"] = tagged_c(r.assembled, "predicted");
  o["equal_branch"] = cnum(r.equal_branch);
  o["general_branch"] = cnum(r.general_branch);
  o["equal_moduli"] = r.equal_moduli;
  {
    ojson a;
    a["value"] = tagged_c(r.arch.value, "predicted");
    a["err_estimate"] = tagged(r.arch.err_estimate, "budget");
    a["converged"] = r.arch.converged;
    o["arch"] = a;
  }
  o["euler_product_equal"] = cnum(r.euler_product_equal);
  o["euler_product_general"] = cnum(r.euler_product_general);
  o["euler_bracket"] = tagged(r.euler_bracket, "budget");
  o["euler_primes"] = r.euler_primes;
  ojson pf = ojson::array();
  for (const cplx& c : r.p_factors) pf.push_back(cnum(c));
  o["p_factors"] = pf;
  o["a_terms"] = r.a_terms.size();
  o["a_tail_bound"] = tagged(r.a_tail_bound, "budget");
  o["budget_rel_logy"] = tagged(r.budget_rel_logy, "budget");
  o["budget_distance"] = tagged(r.budget_distance, "budget");
  o["budget_xminus"] = tagged(r.budget_xminus, "budget");
  o["budget_total"] = tagged(r.budget_total, "budget");
  o["y"] = fmt12(r.y);
  o["A"] = fmt12(r.A);
  o["B"] = fmt12(r.B);
  o["Bprime"] = fmt12(r.Bprime);
  o["X"] = fmt12(r.X);
  o["AX"] = fmt12(r.AX);
  o["x_minus"] = fmt12(r.x_minus);
  o["run"] = r.provenance;
  o["notes"] = r.notes;
  return o;
}

ojson census_json(const PatternCensus& c) {
  ojson o;
  o["f"] = c.fname;
  o["q"] = c.q;
  o["x"] = c.x;
  o["z"] = c.z;
  o["m"] = c.m;
  switch (c.filter) {
    case DFilter::all: o["filter"] = "all"; break;
    case DFilter::non_multiple: o["filter"] = "q-not-dividing-d"; break;
    case DFilter::multiple: o["filter"] = "q-dividing-d"; break;
  }
  o["tolerance"] = fmt12(c.tolerance);
  o["differences"] = c.dlist.size();

  ojson pats = ojson::array();
  const unsigned npat = 1u << c.m;
  for (unsigned pat = 0; pat < npat; pat++) {
    ojson e;
    e["pattern"] = SignPattern::from_index(pat, c.m).str();
    e["mean"] = tagged(c.mean[pat], "empirical");
    e["variance"] = tagged(c.variance[pat], "empirical");
    if (!c.predicted.empty()) {
      e["predicted"] = tagged(c.predicted[pat], "predicted");
      e["abs_dev"] = tagged(std::abs(c.mean[pat] - c.predicted[pat]), "empirical");
      e["within_tolerance"] = std::abs(c.mean[pat] - c.predicted[pat]) <= c.tolerance;
    }
    if (!c.msq_left.empty()) e["msq_left"] = tagged(c.msq_left[pat], "empirical");
    if (!c.msq_predicted.empty()) e["msq_predicted"] = tagged(c.msq_predicted[pat], "predicted");
    pats.push_back(e);
  }
  o["patterns"] = pats;

  if (c.has_tconstants) {
    ojson t;
    t["t22"] = tagged(c.tcon.t22, "predicted");
    t["t42"] = tagged(c.tcon.t42, "predicted");
    t["t44"] = tagged(c.tcon.t44, "predicted");
    t["t22_q"] = c.tcon.t22_q.str();
    t["t42_q"] = c.tcon.t42_q.str();
    t["t44_q"] = c.tcon.t44_q.str();
    t["local_tail"] = tagged(c.tcon.tail, "budget");
    t["P"] = c.tcon.P;
    if (c.tcon.supersingular) t["note"] = c.tcon.note;
    o["t_constants"] = t;
  }
  o["note"] = c.note;
  o["wall_ms"] = fmt12(c.wall_ms);
  return o;
}

std::string census_csv(const PatternCensus& c) {
  std::string out = "d,pattern,count\n";
  const unsigned npat = 1u << c.m;
  for (size_t i = 0; i < c.dlist.size(); i++)
    for (unsigned pat = 0; pat < npat; pat++) {
      out += std::to_string(c.dlist[i]);
      out += ',';
      out += SignPattern::from_index(pat, c.m).str();
      out += ',';
      out += std::to_string(c.counts[i][pat]);
      out += '\n';
    }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << content;
  if (!f) throw std::runtime_error("write failure: " + path);
}

}  // namespace multavg
