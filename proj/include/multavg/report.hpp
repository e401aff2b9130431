#pragma once
// Deterministic serialization: numerals rendered at 12 significant digits,
// insertion-ordered keys, a provenance tag (empirical / predicted / budget) on
// every summary value, and the fixed census CSV layout. Wall-time fields are
// the only run-to-run variation.

#include <string>

#include "json.hpp"
#include "multavg/averages.hpp"
#include "multavg/local.hpp"
#include "multavg/signpatterns.hpp"

namespace multavg {

using ojson = nlohmann::ordered_json;

std::string fmt12(double v);
ojson cnum(cplx v);  // {"re": ..., "im": ...}
ojson tagged(double v, const char* provenance);
ojson tagged_c(cplx v, const char* provenance);

ojson average_json(const AverageResult& r);
ojson gowers_json(const GowersResult& r);
ojson compare_json(const CompareResult& r);
ojson main_term_json(const MainTermReport& r);
ojson census_json(const PatternCensus& c);
std::string census_csv(const PatternCensus& c);

void write_file(const std::string& path, const std::string& content);

}  // namespace multavg
