#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace aoi {

// CLI-facing result container. All values are stored as the strings that
// will be printed (numbers already formatted to 12 significant digits), so
// emit -> parse -> emit is byte-identical for both formats.
struct ReportTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Report {
  std::vector<std::pair<std::string, std::string>> summary;
  std::vector<ReportTable> tables;
};

std::string num12(double x);
std::string int_str(std::int64_t x);

void emit_csv(const Report& report, std::ostream& os);
void emit_jsonl(const Report& report, std::ostream& os);

Report parse_csv(std::istream& is);
Report parse_jsonl(std::istream& is);

}  // namespace aoi
