#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aoi/analytic.hpp"
#include "aoi/chain.hpp"
#include "aoi/dist.hpp"
#include "aoi/report.hpp"
#include "aoi/sim.hpp"

namespace {

using namespace aoi;

// Exit contract: 0 success, 1 tolerance/convergence failure, 2 usage error.
struct ToleranceFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string discipline = "preemptive";
  std::string y_spec;
  std::string s_spec;
  double gamma = -1.0;
  int order = 256;
  std::int64_t nmax = 0;  // 0 = spec-default heuristic
  double tol = 1e-12;
  std::int64_t max_iters = 1000000;
  std::int64_t slots = 1000000;
  std::int64_t warmup = 10000;
  std::uint64_t seed = 1;
  int reps = 8;
  int threads = 0;
  std::string format = "csv";
  std::string out;
  std::string dump_edges_path;
  double mean_tol = 1e-6;
  double pmf_tol = 1e-6;
  double sim_sigmas = 4.0;
  double sim_pmf_coeff = 10.0;
  std::string sweep_gamma;
  std::string sweep_p;
  bool with_chain = false;
  bool with_sim = false;
};

void add_model_flags(CLI::App* cmd, Options& o, bool y_required) {
  cmd->add_option("--discipline", o.discipline, "preemptive | nonpreemptive")
      ->check(CLI::IsMember({"preemptive", "nonpreemptive"}));
  auto* y = cmd->add_option(
      "--Y", o.y_spec,
      "interarrival law: geometric:<rate> | deterministic:<k> | "
      "explicit:<w1,w2,...>");
  if (y_required) y->required();
  auto* s = cmd->add_option("--S", o.s_spec, "service law (same grammar)");
  auto* g = cmd->add_option("--gamma", o.gamma,
                            "geometric service rate (alternative to --S)");
  s->excludes(g);
}

void add_output_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--format", o.format, "csv | jsonl")
      ->check(CLI::IsMember({"csv", "jsonl"}));
  cmd->add_option("--out", o.out, "output path (default stdout)");
  cmd->add_option("--threads", o.threads,
                  "worker threads (0 = library default, 1 = serial)")
      ->check(CLI::Range(0, 1024));
}

void add_series_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--order", o.order, "series truncation order")
      ->check(CLI::Range(2, 1000000));
}

void add_chain_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--nmax", o.nmax, "age truncation bound (0 = auto)")
      ->check(CLI::Range(std::int64_t{0}, std::int64_t{10000000}));
  cmd->add_option("--tol", o.tol, "stationary solve tolerance")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", o.max_iters, "stationary iteration cap")
      ->check(CLI::PositiveNumber);
}

void add_sim_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--slots", o.slots, "simulated slots per replication")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--warmup", o.warmup, "discarded slots")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", o.seed, "base RNG seed");
  cmd->add_option("--reps", o.reps, "independent replications")
      ->check(CLI::Range(1, 100000));
}

Discipline parse_discipline(const std::string& d) {
  return d == "preemptive" ? Discipline::Preemptive
                           : Discipline::NonPreemptive;
}

SystemSpec build_spec(const Options& o) {
  SystemSpec spec;
  spec.discipline = parse_discipline(o.discipline);
  spec.interarrival = parse_dist(o.y_spec);
  if (o.gamma >= 0.0) {
    spec.service = make_geometric(o.gamma);
  } else if (!o.s_spec.empty()) {
    spec.service = parse_dist(o.s_spec);
  } else {
    throw std::invalid_argument("a service law is required: --S or --gamma");
  }
  return spec;
}

void write_report(const Report& rep, const Options& o) {
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out, std::ios::binary);
    if (!file) throw std::invalid_argument("cannot open output: " + o.out);
    os = &file;
  }
  if (o.format == "jsonl") {
    emit_jsonl(rep, *os);
  } else {
    emit_csv(rep, *os);
  }
}

void append_spec_summary(Report& rep, const SystemSpec& spec) {
  rep.summary.emplace_back("discipline",
                           spec.discipline == Discipline::Preemptive
                               ? "preemptive"
                               : "nonpreemptive");
  rep.summary.emplace_back("interarrival", spec.interarrival.to_string());
  rep.summary.emplace_back("service", spec.service.to_string());
}

ReportTable pmf_table(const AoIDistribution& a, std::int64_t upto) {
  ReportTable t;
  t.name = "pmf";
  t.columns = {"n", "prob"};
  for (std::int64_t n = 1; n <= upto; ++n) {
    t.rows.push_back({int_str(n), num12(a.prob(n))});
  }
  return t;
}

struct AnalyticRun {
  AoIDistribution dist;
  std::string formula;
  std::optional<double> closed_mean;
};

AnalyticRun run_analytic_engine(const SystemSpec& spec, int order) {
  AnalyticRun run;
  const DiscreteDist& Y = spec.interarrival;
  const DiscreteDist& S = spec.service;
  if (spec.discipline == Discipline::NonPreemptive) {
    if (!S.is_geometric()) {
      throw std::invalid_argument(
          "non-preemptive analytics cover geometric service only; "
          "use `aoi sim` for general service");
    }
    const double g = S.rate();
    run.dist = pgf_nonpreemptive_ggeo(Y, g, order);
    run.formula = "nonpreemptive-geometric-service";
    if (g < 1.0) run.closed_mean = mean_nonpreemptive_ggeo(Y, g);
    return run;
  }
  if (S.is_geometric()) {
    run.dist = pgf_preemptive_ggeo(Y, S.rate(), order);
    run.formula = "preemptive-geometric-service";
    run.closed_mean = mean_preemptive_ggeo(Y, S.rate());
  } else if (Y.is_geometric()) {
    run.dist = pgf_preemptive_berg(Y.rate(), S, order);
    run.formula = "preemptive-bernoulli-arrivals";
    if (Y.rate() < 1.0) run.closed_mean = mean_preemptive_berg(Y.rate(), S);
  } else {
    run.dist = pgf_preemptive_gg(Y, S, order);
    run.formula = "preemptive-general";
  }
  return run;
}

void append_dist_summary(Report& rep, const AoIDistribution& a,
                         const char* prefix) {
  const std::string p(prefix);
  rep.summary.emplace_back(p + "mean", num12(a.mean));
  rep.summary.emplace_back(p + "mean_lower", num12(a.mean_lower));
  rep.summary.emplace_back(p + "mean_upper", num12(a.mean_upper));
  rep.summary.emplace_back(p + "mean_certified",
                           a.mean_certified ? "true" : "false");
  rep.summary.emplace_back(p + "captured_mass", num12(a.captured_mass));
  rep.summary.emplace_back(p + "tail_bound", num12(a.tail_bound));
}

int cmd_analytic(const Options& o) {
  const SystemSpec spec = build_spec(o);
  const AnalyticRun run = run_analytic_engine(spec, o.order);
  Report rep;
  rep.summary.emplace_back("command", "analytic");
  append_spec_summary(rep, spec);
  rep.summary.emplace_back("order", int_str(o.order));
  rep.summary.emplace_back("formula", run.formula);
  if (run.closed_mean) {
    rep.summary.emplace_back("closed_form_mean", num12(*run.closed_mean));
  }
  append_dist_summary(rep, run.dist, "series_");
  if (run.closed_mean) {
    rep.summary.emplace_back(
        "closed_vs_series",
        num12(std::abs(*run.closed_mean - run.dist.mean)));
  }
  rep.tables.push_back(pmf_table(run.dist, o.order));
  write_report(rep, o);
  return 0;
}

struct ChainRun {
  ChainModel model;
  StationaryVector pi;
  AoIDistribution dist;
};

ChainRun run_chain_engine(const SystemSpec& spec, const Options& o) {
  const std::int64_t nmax =
      o.nmax > 0 ? o.nmax : default_nmax(spec.interarrival, spec.service);
  ChainRun run;
  if (spec.discipline == Discipline::Preemptive) {
    run.model = build_preemptive(spec.interarrival, spec.service, nmax);
  } else {
    if (!spec.service.is_geometric()) {
      throw std::invalid_argument(
          "the non-preemptive chain oracle covers geometric service only; "
          "use `aoi sim` for general service");
    }
    run.model =
        build_nonpreemptive(spec.interarrival, spec.service.rate(), nmax);
  }
  run.pi = stationary(run.model, o.tol, o.max_iters, o.threads);
  run.dist = aoi_marginal(run.model, run.pi);
  return run;
}

int cmd_chain(const Options& o) {
  const SystemSpec spec = build_spec(o);
  ChainRun run = run_chain_engine(spec, o);
  if (!o.dump_edges_path.empty()) {
    std::ofstream dump(o.dump_edges_path, std::ios::binary);
    if (!dump) {
      throw std::invalid_argument("cannot open " + o.dump_edges_path);
    }
    dump_edges(run.model, dump);
  }
  Report rep;
  rep.summary.emplace_back("command", "chain");
  append_spec_summary(rep, spec);
  rep.summary.emplace_back("nmax", int_str(run.model.n_max()));
  rep.summary.emplace_back("states", int_str(run.model.num_states()));
  rep.summary.emplace_back("tol", num12(o.tol));
  rep.summary.emplace_back("iterations", int_str(run.pi.iterations));
  rep.summary.emplace_back("solver_residual", num12(run.pi.residual));
  rep.summary.emplace_back("balance_residual",
                           num12(balance_residuals(run.model, run.pi)));
  rep.summary.emplace_back("kept_flow", num12(run.pi.kept_flow));
  append_dist_summary(rep, run.dist, "");
  rep.tables.push_back(pmf_table(run.dist, run.model.n_max()));
  write_report(rep, o);
  return 0;
}

SimResult run_sim_engine(const SystemSpec& spec, const Options& o) {
  SimConfig cfg;
  cfg.spec = spec;
  cfg.slots = o.slots;
  cfg.warmup = o.warmup;
  cfg.seed = o.seed;
  cfg.replications = o.reps;
  return simulate(cfg, o.threads);
}

int cmd_sim(const Options& o) {
  const SystemSpec spec = build_spec(o);
  const SimResult res = run_sim_engine(spec, o);
  Report rep;
  rep.summary.emplace_back("command", "sim");
  append_spec_summary(rep, spec);
  rep.summary.emplace_back("slots", int_str(o.slots));
  rep.summary.emplace_back("warmup", int_str(o.warmup));
  rep.summary.emplace_back("seed", int_str(static_cast<std::int64_t>(o.seed)));
  rep.summary.emplace_back("replications", int_str(o.reps));
  rep.summary.emplace_back("rng", res.rng_description);
  rep.summary.emplace_back("pooled_mean", num12(res.pooled_mean));
  rep.summary.emplace_back("std_error", num12(res.std_error));
  ReportTable reps_table;
  reps_table.name = "replications";
  reps_table.columns = {"rep", "mean"};
  for (std::size_t r = 0; r < res.replication_means.size(); ++r) {
    reps_table.rows.push_back(
        {int_str(static_cast<std::int64_t>(r)),
         num12(res.replication_means[r])});
  }
  rep.tables.push_back(std::move(reps_table));
  ReportTable pmf;
  pmf.name = "pmf";
  pmf.columns = {"n", "prob"};
  for (std::size_t n = 1; n < res.pmf.size(); ++n) {
    pmf.rows.push_back({int_str(static_cast<std::int64_t>(n)),
                        num12(res.pmf[n])});
  }
  rep.tables.push_back(std::move(pmf));
  write_report(rep, o);
  return 0;
}

int cmd_compare(const Options& o) {
  const SystemSpec spec = build_spec(o);
  const bool analytic_ok = spec.discipline == Discipline::Preemptive ||
                           spec.service.is_geometric();
  const bool chain_ok = analytic_ok;
  if (!analytic_ok) {
    throw std::invalid_argument(
        "compare needs at least two engines; non-preemptive general service "
        "leaves only the simulator");
  }

  std::optional<AnalyticRun> an;
  std::optional<ChainRun> ch;
  an = run_analytic_engine(spec, o.order);
  if (chain_ok) ch = run_chain_engine(spec, o);
  const SimResult sim = run_sim_engine(spec, o);
  const std::int64_t recorded =
      static_cast<std::int64_t>(o.reps) * (o.slots - o.warmup);

  Report rep;
  rep.summary.emplace_back("command", "compare");
  append_spec_summary(rep, spec);

  ReportTable means;
  means.name = "means";
  means.columns = {"engine", "mean"};
  const double mean_an =
      an->closed_mean ? *an->closed_mean : an->dist.mean;
  means.rows.push_back({"analytic", num12(mean_an)});
  if (ch) means.rows.push_back({"chain", num12(ch->dist.mean)});
  means.rows.push_back({"sim", num12(sim.pooled_mean)});

  bool ok = true;
  const auto check = [&](const std::string& name, double gap, double tol) {
    rep.summary.emplace_back(name, num12(gap));
    rep.summary.emplace_back(name + "_tol", num12(tol));
    if (!(gap <= tol)) ok = false;
  };

  if (ch) {
    check("gap_mean_analytic_chain", std::abs(mean_an - ch->dist.mean),
          o.mean_tol);
    double linf = 0.0;
    const std::int64_t upto = std::min<std::int64_t>(o.order, ch->model.n_max());
    for (std::int64_t n = 1; n <= upto; ++n) {
      linf = std::max(linf, std::abs(an->dist.prob(n) - ch->dist.prob(n)));
    }
    check("gap_pmf_analytic_chain", linf, o.pmf_tol);
  }
  const double sim_mean_tol =
      std::max(o.mean_tol, o.sim_sigmas * sim.std_error);
  check("gap_mean_analytic_sim", std::abs(mean_an - sim.pooled_mean),
        sim_mean_tol);
  {
    double linf = 0.0;
    const std::int64_t upto = std::min<std::int64_t>(
        o.order, static_cast<std::int64_t>(sim.pmf.size()) - 1);
    for (std::int64_t n = 1; n <= upto; ++n) {
      linf = std::max(linf, std::abs(an->dist.prob(n) - sim.pmf[n]));
    }
    const double sim_pmf_tol = std::max(
        o.pmf_tol,
        o.sim_pmf_coeff / std::sqrt(static_cast<double>(recorded)));
    check("gap_pmf_analytic_sim", linf, sim_pmf_tol);
  }
  rep.summary.emplace_back("within_tolerances", ok ? "true" : "false");
  rep.tables.push_back(std::move(means));
  write_report(rep, o);
  if (!ok) {
    throw ToleranceFailure("compare: engines disagree beyond tolerances");
  }
  return 0;
}

std::vector<double> parse_grid(const std::string& text) {
  double lo = 0, hi = 0, step = 0;
  const auto c1 = text.find(':');
  const auto c2 = text.find(':', c1 == std::string::npos ? 0 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) {
    throw std::invalid_argument("grid spec must be lo:hi:step, got " + text);
  }
  try {
    lo = std::stod(text.substr(0, c1));
    hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    step = std::stod(text.substr(c2 + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("grid spec must be lo:hi:step, got " + text);
  }
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  std::vector<double> grid;
  for (double v = lo; v <= hi + 1e-12; v += step) grid.push_back(v);
  if (grid.empty()) throw std::invalid_argument("empty sweep grid");
  return grid;
}

double analytic_mean_for(const SystemSpec& spec, int order) {
  const DiscreteDist& Y = spec.interarrival;
  const DiscreteDist& S = spec.service;
  if (spec.discipline == Discipline::Preemptive) {
    if (S.is_geometric()) return mean_preemptive_ggeo(Y, S.rate());
    if (Y.is_geometric() && Y.rate() < 1.0) {
      return mean_preemptive_berg(Y.rate(), S);
    }
    return pgf_preemptive_gg(Y, S, order).mean;
  }
  if (!S.is_geometric()) {
    throw std::invalid_argument(
        "non-preemptive analytics cover geometric service only");
  }
  if (S.rate() < 1.0) return mean_nonpreemptive_ggeo(Y, S.rate());
  return pgf_nonpreemptive_ggeo(Y, S.rate(), order).mean;
}

int cmd_sweep(const Options& o) {
  if (o.sweep_gamma.empty() && o.sweep_p.empty()) {
    throw std::invalid_argument("sweep needs --sweep-gamma and/or --sweep-p");
  }
  const std::vector<double> p_grid =
      o.sweep_p.empty() ? std::vector<double>{} : parse_grid(o.sweep_p);
  const std::vector<double> g_grid =
      o.sweep_gamma.empty() ? std::vector<double>{} : parse_grid(o.sweep_gamma);
  const std::size_t np = std::max<std::size_t>(1, p_grid.size());
  const std::size_t ng = std::max<std::size_t>(1, g_grid.size());
  if (np * ng > 10000) {
    throw std::invalid_argument("sweep grid exceeds 10000 points");
  }
  if (p_grid.empty() && o.y_spec.empty()) {
    throw std::invalid_argument("sweep needs --Y unless --sweep-p is given");
  }
  if (g_grid.empty() && o.s_spec.empty() && o.gamma < 0.0) {
    throw std::invalid_argument(
        "sweep needs --S/--gamma unless --sweep-gamma is given");
  }

  ReportTable table;
  table.name = "sweep";
  if (!p_grid.empty()) table.columns.push_back("p");
  if (!g_grid.empty()) table.columns.push_back("gamma");
  table.columns.push_back("mean_analytic");
  if (o.with_chain) table.columns.push_back("mean_chain");
  if (o.with_sim) table.columns.push_back("mean_sim");

  const std::int64_t total = static_cast<std::int64_t>(np * ng);
  std::vector<std::vector<std::string>> rows(total);
  std::vector<std::string> errors(total);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) \
    num_threads(o.threads == 0 ? 2 : o.threads) if (o.threads != 1)
#endif
  for (std::int64_t idx = 0; idx < total; ++idx) {
    try {
      const std::size_t ip = static_cast<std::size_t>(idx) / ng;
      const std::size_t ig = static_cast<std::size_t>(idx) % ng;
      SystemSpec spec;
      spec.discipline = parse_discipline(o.discipline);
      spec.interarrival = p_grid.empty() ? parse_dist(o.y_spec)
                                         : make_geometric(p_grid[ip]);
      if (!g_grid.empty()) {
        spec.service = make_geometric(g_grid[ig]);
      } else if (o.gamma >= 0.0) {
        spec.service = make_geometric(o.gamma);
      } else {
        spec.service = parse_dist(o.s_spec);
      }
      std::vector<std::string> row;
      if (!p_grid.empty()) row.push_back(num12(p_grid[ip]));
      if (!g_grid.empty()) row.push_back(num12(g_grid[ig]));
      row.push_back(num12(analytic_mean_for(spec, o.order)));
      if (o.with_chain) {
        Options local = o;
        local.threads = 1;
        row.push_back(num12(run_chain_engine(spec, local).dist.mean));
      }
      if (o.with_sim) {
        Options local = o;
        local.threads = 1;
        row.push_back(num12(run_sim_engine(spec, local).pooled_mean));
      }
      rows[idx] = std::move(row);
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw std::invalid_argument("sweep point failed: " + e);
  }
  table.rows = std::move(rows);

  Report rep;
  rep.summary.emplace_back("command", "sweep");
  rep.summary.emplace_back("discipline", o.discipline);
  rep.summary.emplace_back("points", int_str(total));
  rep.tables.push_back(std::move(table));
  write_report(rep, o);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete age-of-information toolkit for bufferless "
               "status-updating systems"};
  app.require_subcommand(1);
  Options o;

  CLI::App* analytic = app.add_subcommand(
      "analytic", "stationary age pmf and mean from the closed forms");
  add_model_flags(analytic, o, true);
  add_series_flags(analytic, o);
  add_output_flags(analytic, o);

  CLI::App* chain = app.add_subcommand(
      "chain", "exact truncated-chain oracle: stationary age distribution");
  add_model_flags(chain, o, true);
  add_chain_flags(chain, o);
  add_output_flags(chain, o);
  chain->add_option("--dump-edges", o.dump_edges_path,
                    "write the transition edge list to a file");

  CLI::App* sim = app.add_subcommand(
      "sim", "slot-level Monte Carlo estimate of the age distribution");
  add_model_flags(sim, o, true);
  add_sim_flags(sim, o);
  add_output_flags(sim, o);

  CLI::App* compare = app.add_subcommand(
      "compare", "run all applicable engines and check pairwise agreement");
  add_model_flags(compare, o, true);
  add_series_flags(compare, o);
  add_chain_flags(compare, o);
  add_sim_flags(compare, o);
  add_output_flags(compare, o);
  compare->add_option("--mean-tol", o.mean_tol, "analytic/chain mean gap")
      ->check(CLI::PositiveNumber);
  compare->add_option("--pmf-tol", o.pmf_tol, "analytic/chain pmf gap")
      ->check(CLI::PositiveNumber);
  compare->add_option("--sim-sigmas", o.sim_sigmas,
                      "allowed sim deviation in standard errors")
      ->check(CLI::PositiveNumber);
  compare->add_option("--sim-pmf-coeff", o.sim_pmf_coeff,
                      "sim pmf gap allowance per 1/sqrt(slots)")
      ->check(CLI::PositiveNumber);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "parameter grid over arrival/service rates, one row per point");
  add_model_flags(sweep, o, false);
  add_series_flags(sweep, o);
  add_chain_flags(sweep, o);
  add_sim_flags(sweep, o);
  add_output_flags(sweep, o);
  sweep->add_option("--sweep-p", o.sweep_p,
                    "grid lo:hi:step of Bernoulli arrival rates");
  sweep->add_option("--sweep-gamma", o.sweep_gamma,
                    "grid lo:hi:step of geometric service rates");
  sweep->add_flag("--with-chain", o.with_chain, "add a chain-oracle column");
  sweep->add_flag("--with-sim", o.with_sim, "add a simulation column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(analytic)) return cmd_analytic(o);
    if (app.got_subcommand(chain)) return cmd_chain(o);
    if (app.got_subcommand(sim)) return cmd_sim(o);
    if (app.got_subcommand(compare)) return cmd_compare(o);
    if (app.got_subcommand(sweep)) return cmd_sweep(o);
  } catch (const ToleranceFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
