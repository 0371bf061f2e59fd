#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "aoi/report.hpp"
#include "doctest.h"

using namespace aoi;

namespace {

Report sample_report() {
  Report rep;
  rep.summary.emplace_back("command", "analytic");
  rep.summary.emplace_back("interarrival", "explicit:1,1");  // comma needs quoting
  rep.summary.emplace_back("mean", num12(11.0 / 3.0));
  ReportTable t;
  t.name = "pmf";
  t.columns = {"n", "prob"};
  t.rows = {{"1", num12(0.25)}, {"2", num12(0.1875)}};
  rep.tables.push_back(t);
  ReportTable r;
  r.name = "replications";
  r.columns = {"rep", "mean"};
  r.rows = {{"0", num12(3.001)}, {"1", num12(2.999)}};
  rep.tables.push_back(r);
  return rep;
}

std::string emit_csv_str(const Report& r) {
  std::ostringstream os;
  emit_csv(r, os);
  return os.str();
}

std::string emit_jsonl_str(const Report& r) {
  std::ostringstream os;
  emit_jsonl(r, os);
  return os.str();
}

int run_cli(const std::string& args, const std::string& out_file) {
  const std::string cmd =
      std::string(AOI_CLI_PATH) + " " + args + " >" + out_file + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("csv emit/parse/emit is byte-identical") {
  const Report rep = sample_report();
  const std::string once = emit_csv_str(rep);
  std::istringstream is(once);
  const Report parsed = parse_csv(is);
  CHECK(parsed.summary == rep.summary);
  REQUIRE(parsed.tables.size() == rep.tables.size());
  for (std::size_t i = 0; i < parsed.tables.size(); ++i) {
    CHECK(parsed.tables[i].columns == rep.tables[i].columns);
    CHECK(parsed.tables[i].rows == rep.tables[i].rows);
  }
  CHECK(emit_csv_str(parsed) == once);
}

TEST_CASE("jsonl emit/parse/emit is byte-identical") {
  const Report rep = sample_report();
  const std::string once = emit_jsonl_str(rep);
  std::istringstream is(once);
  const Report parsed = parse_jsonl(is);
  CHECK(parsed.summary == rep.summary);
  REQUIRE(parsed.tables.size() == rep.tables.size());
  for (std::size_t i = 0; i < parsed.tables.size(); ++i) {
    CHECK(parsed.tables[i].name == rep.tables[i].name);
    CHECK(parsed.tables[i].columns == rep.tables[i].columns);
    CHECK(parsed.tables[i].rows == rep.tables[i].rows);
  }
  CHECK(emit_jsonl_str(parsed) == once);
}

TEST_CASE("twelve significant digits survive a parse cycle") {
  for (double x : {1.0 / 3.0, 11.0 / 3.0, 2.9999999999, 1e-12, 123456.789}) {
    const std::string s = num12(x);
    CHECK(num12(std::strtod(s.c_str(), nullptr)) == s);
  }
}

TEST_CASE("cli exit codes follow the contract") {
  const std::string tmp = "cli_test_out.txt";
  // 0: success
  CHECK(run_cli("analytic --discipline preemptive --Y geometric:0.5 "
                "--S geometric:0.5",
                tmp) == 0);
  // 2: usage / parameter errors
  CHECK(run_cli("analytic --Y geometric:0.5", tmp) == 2);  // no service law
  CHECK(run_cli("analytic --Y geometric:1.5 --gamma 0.5", tmp) == 2);
  CHECK(run_cli("analytic --discipline nonpreemptive --Y geometric:0.5 "
                "--S explicit:1,1",
                tmp) == 2);
  CHECK(run_cli("bogus-subcommand", tmp) == 2);
  CHECK(run_cli("sweep --discipline preemptive --Y geometric:0.5", tmp) == 2);
  // 1: tolerance failure (tiny truncation makes the oracle disagree)
  CHECK(run_cli("compare --discipline preemptive --Y geometric:0.5 "
                "--S geometric:0.5 --nmax 5 --slots 20000 --reps 2",
                tmp) == 1);
  std::remove(tmp.c_str());
}

TEST_CASE("cli analytic output carries the advertised values") {
  const std::string tmp = "cli_analytic_out.csv";
  REQUIRE(run_cli("analytic --discipline preemptive --Y geometric:0.5 "
                  "--S geometric:0.5 --out " +
                      tmp,
                  "cli_stdout.txt") == 0);
  std::ifstream in(tmp);
  const Report rep = parse_csv(in);
  double closed = 0.0;
  bool found = false;
  for (const auto& [k, v] : rep.summary) {
    if (k == "closed_form_mean") {
      closed = std::strtod(v.c_str(), nullptr);
      found = true;
    }
  }
  CHECK(found);
  CHECK(closed == doctest::Approx(3.0).epsilon(1e-11));
  REQUIRE(!rep.tables.empty());
  CHECK(rep.tables[0].columns == std::vector<std::string>{"n", "prob"});
  CHECK(std::strtod(rep.tables[0].rows[0][1].c_str(), nullptr) ==
        doctest::Approx(0.25).epsilon(1e-11));
  std::remove(tmp.c_str());
  std::remove("cli_stdout.txt");
}

TEST_CASE("cli sweep rows are monotone where the formula says so") {
  const std::string tmp = "cli_sweep_out.csv";
  REQUIRE(run_cli("sweep --discipline preemptive --Y geometric:0.5 "
                  "--sweep-gamma 0.1:0.9:0.1 --out " +
                      tmp,
                  "cli_stdout.txt") == 0);
  std::ifstream in(tmp);
  const Report rep = parse_csv(in);
  REQUIRE(rep.tables.size() == 1);
  REQUIRE(rep.tables[0].rows.size() == 9);
  double prev = 1e300;
  for (const auto& row : rep.tables[0].rows) {
    const double mean = std::strtod(row[1].c_str(), nullptr);
    CHECK(mean < prev);
    prev = mean;
  }
  std::remove(tmp.c_str());
  std::remove("cli_stdout.txt");

  // sweeping the arrival rate with gamma fixed is decreasing as well
  REQUIRE(run_cli("sweep --discipline preemptive --sweep-p 0.2:0.8:0.2 "
                  "--gamma 0.5 --out " +
                      tmp,
                  "cli_stdout.txt") == 0);
  std::ifstream in2(tmp);
  const Report rep2 = parse_csv(in2);
  prev = 1e300;
  for (const auto& row : rep2.tables[0].rows) {
    const double mean = std::strtod(row[1].c_str(), nullptr);
    CHECK(mean < prev);
    prev = mean;
  }
  std::remove(tmp.c_str());
  std::remove("cli_stdout.txt");
}

TEST_CASE("jsonl output parses and matches csv content") {
  const std::string tmp = "cli_sim_out.jsonl";
  REQUIRE(run_cli("sim --discipline preemptive --Y geometric:0.5 "
                  "--S geometric:0.5 --slots 50000 --reps 2 --format jsonl "
                  "--out " +
                      tmp,
                  "cli_stdout.txt") == 0);
  std::ifstream in(tmp);
  const Report rep = parse_jsonl(in);
  bool has_mean = false;
  for (const auto& [k, v] : rep.summary) has_mean |= (k == "pooled_mean");
  CHECK(has_mean);
  REQUIRE(rep.tables.size() == 2);
  CHECK(rep.tables[0].name == "replications");
  CHECK(rep.tables[1].name == "pmf");
  const std::string bytes = slurp(tmp);
  std::ostringstream re;
  emit_jsonl(rep, re);
  CHECK(re.str() == bytes);
  std::remove(tmp.c_str());
  std::remove("cli_stdout.txt");
}
