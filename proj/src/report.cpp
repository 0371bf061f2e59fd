#include "aoi/report.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace aoi {

std::string num12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

std::string int_str(std::int64_t x) { return std::to_string(x); }

namespace {

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n") != std::string::npos;
}

std::string csv_field(const std::string& s) {
  if (!needs_quoting(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void emit_row(const std::vector<std::string>& cells, std::ostream& os) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    os << csv_field(cells[i]);
  }
  os << '\n';
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

}  // namespace

void emit_csv(const Report& report, std::ostream& os) {
  emit_row({"key", "value"}, os);
  for (const auto& [k, v] : report.summary) emit_row({k, v}, os);
  for (const ReportTable& t : report.tables) {
    os << '\n';
    emit_row(t.columns, os);
    for (const auto& row : t.rows) emit_row(row, os);
  }
}

Report parse_csv(std::istream& is) {
  Report rep;
  std::string line;
  bool in_summary = false;
  bool at_section_start = true;
  ReportTable* table = nullptr;
  bool first_section = true;
  while (std::getline(is, line)) {
    if (line.empty()) {
      at_section_start = true;
      table = nullptr;
      in_summary = false;
      continue;
    }
    auto cells = split_csv_row(line);
    if (at_section_start) {
      at_section_start = false;
      if (first_section && cells.size() == 2 && cells[0] == "key" &&
          cells[1] == "value") {
        in_summary = true;
        first_section = false;
        continue;
      }
      first_section = false;
      rep.tables.push_back({});
      table = &rep.tables.back();
      table->columns = std::move(cells);
      continue;
    }
    if (in_summary) {
      if (cells.size() != 2) throw std::invalid_argument("bad summary row");
      rep.summary.emplace_back(std::move(cells[0]), std::move(cells[1]));
    } else if (table) {
      table->rows.push_back(std::move(cells));
    }
  }
  return rep;
}

void emit_jsonl(const Report& report, std::ostream& os) {
  using json = nlohmann::ordered_json;
  {
    json j;
    j["record"] = "summary";
    json fields = json::object();
    for (const auto& [k, v] : report.summary) fields[k] = v;
    j["fields"] = fields;
    os << j.dump() << '\n';
  }
  for (const ReportTable& t : report.tables) {
    json hdr;
    hdr["record"] = "table";
    hdr["name"] = t.name;
    hdr["columns"] = t.columns;
    os << hdr.dump() << '\n';
    for (const auto& row : t.rows) {
      json j;
      j["record"] = "row";
      j["table"] = t.name;
      j["values"] = row;
      os << j.dump() << '\n';
    }
  }
}

Report parse_jsonl(std::istream& is) {
  using json = nlohmann::ordered_json;
  Report rep;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string record = j.at("record").get<std::string>();
    if (record == "summary") {
      for (const auto& [k, v] : j.at("fields").items()) {
        rep.summary.emplace_back(k, v.get<std::string>());
      }
    } else if (record == "table") {
      ReportTable t;
      t.name = j.at("name").get<std::string>();
      t.columns = j.at("columns").get<std::vector<std::string>>();
      rep.tables.push_back(std::move(t));
    } else if (record == "row") {
      if (rep.tables.empty()) throw std::invalid_argument("row before table");
      rep.tables.back().rows.push_back(
          j.at("values").get<std::vector<std::string>>());
    } else {
      throw std::invalid_argument("unknown record type: " + record);
    }
  }
  return rep;
}

}  // namespace aoi
