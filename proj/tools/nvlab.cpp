// nvlab: experiment runner for the Ninomiya-Victoir splitting library.
//
// Exit codes: 0 success, 1 runtime failure, 2 degenerate rate fit (converge),
// 3 distribution comparison rejected (errordist), 64 configuration error.

#include <nvsplit/nvsplit.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace nvsplit;

constexpr int kExitFailure = 1;
constexpr int kExitDegenerate = 2;
constexpr int kExitRejected = 3;
constexpr int kExitConfig = 64;

struct FlagValues {
  std::string config_file;
  std::vector<std::string> params;
  std::map<std::string, std::string> values;
};

void add_flags(CLI::App* cmd, FlagValues& f) {
  cmd->add_option("--config", f.config_file, "key=value config file (flags override it)");
  for (const char* key : {"model", "scheme", "N", "M", "T", "x0", "seed", "ref-refine", "out", "alpha", "kind", "t",
                          "substeps", "threads"}) {
    cmd->add_option(std::string("--") + key, f.values[key]);
  }
  cmd->add_option("--param", f.params, "model parameter as name=value (repeatable)");
}

ExperimentConfig load_config(const FlagValues& f, bool dyadic_n) {
  Settings file;
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + f.config_file + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    file = parse_settings(ss.str(), f.config_file);
  }
  Settings flags;
  for (const auto& [k, v] : f.values) {
    if (!v.empty()) flags[k] = Setting{v, "command line", 0, 0};
  }
  for (const auto& p : f.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects name=value, got '" + p + "'");
    flags["param." + p.substr(0, eq)] = Setting{p.substr(eq + 1), "command line", 0, 0};
  }
  return resolve_config(file, flags, dyadic_n);
}

std::uint64_t require_seed(const ExperimentConfig& cfg) {
  if (!cfg.seed) throw ConfigError("a --seed is required (no wall-clock default)");
  return *cfg.seed;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out);
  return (std::filesystem::path(cfg.out) / name).string();
}

void write_manifest(const std::string& command, const ExperimentConfig& cfg) {
  auto os = io::open_csv(out_path(cfg, "manifest.csv"));
  io::write_key_values(os, manifest_entries(command, cfg));
}

PreparedModel prepare(const ExperimentConfig& cfg) {
  FlowOptions fo;
  fo.numeric_substeps = cfg.substeps;
  fo.coarsest_steps = cfg.n_list.front();
  return PreparedModel(build_model(cfg), fo);
}

int cmd_converge(const ExperimentConfig& cfg) {
  const auto seed = require_seed(cfg);
  write_manifest("converge", cfg);
  const PreparedModel pm = prepare(cfg);
  RefConfig ref;
  ref.refinement = cfg.ref_refine;
  const RateTable table = strong_error(pm, parse_scheme(cfg.scheme), cfg.n_list, cfg.paths, seed, ref, cfg.threads);
  {
    auto os = io::open_csv(out_path(cfg, "rates.csv"));
    io::write_rates(os, table);
  }
  for (const auto& r : table.rows) {
    std::cout << "N=" << r.N << "  err=" << io::fmt(r.err) << "  ci=" << io::fmt(r.ci_half) << '\n';
  }
  if (table.gate_gap && !table.gate_ok) {
    std::cerr << "warning: reference self-consistency gap " << io::fmt(*table.gate_gap)
              << " exceeds the finest scheme error; increase --ref-refine\n";
  }
  if (table.degenerate) {
    std::cout << "errors at round-off floor: rate fit rejected as degenerate\n";
    return kExitDegenerate;
  }
  std::cout << "slope=" << io::fmt(table.fit->slope) << " +/- " << io::fmt(table.fit->slope_ci) << '\n';
  return 0;
}

int cmd_errordist(const ExperimentConfig& cfg) {
  const auto seed = require_seed(cfg);
  write_manifest("errordist", cfg);
  const PreparedModel pm = prepare(cfg);
  RefConfig ref;
  ref.refinement = cfg.ref_refine;
  const int steps = cfg.n_list.back();
  const SampleKind kind = parse_kind(cfg.kind);
  const ErrorSampleSet empirical = normalized_error_samples(pm, steps, cfg.paths, seed, ref, kind, cfg.threads);
  // Independent seed for the limit side so the two-sample test sees independent draws.
  const std::uint64_t limit_seed = seed + 0x9E3779B97F4A7C15ull;
  LimitOptions lo;
  lo.threads = cfg.threads;
  const int fine = steps * cfg.ref_refine;
  const ErrorSampleSet limit = kind == SampleKind::U_N ? simulate_limit_sde_u(pm, cfg.paths, fine, limit_seed, lo)
                                                       : simulate_limit_sde_v(pm, cfg.paths, fine, limit_seed, lo);
  const ComparisonReport rep = compare_distributions(empirical, limit, cfg.alpha);
  {
    auto os = io::open_csv(out_path(cfg, "empirical.csv"));
    io::write_samples(os, empirical);
  }
  {
    auto os = io::open_csv(out_path(cfg, "limit.csv"));
    io::write_samples(os, limit);
  }
  {
    auto os = io::open_csv(out_path(cfg, "comparison.csv"));
    io::write_comparison(os, rep);
  }
  for (const auto& r : rep.rows) {
    std::cout << "coord " << r.coord << ": var " << io::fmt(r.var_a) << " vs " << io::fmt(r.var_b) << ", KS "
              << io::fmt(r.ks) << " (p=" << io::fmt(r.p) << ")\n";
  }
  std::cout << (rep.pass ? "PASS" : "FAIL") << " at alpha=" << io::fmt(rep.alpha) << '\n';
  return rep.pass ? 0 : kExitRejected;
}

int cmd_check_commute(const ExperimentConfig& cfg) {
  write_manifest("check-commute", cfg);
  const SdeModel m = build_model(cfg);
  const CommutativityReport rep = check_commutativity(m);
  {
    auto os = io::open_csv(out_path(cfg, "commutativity.csv"));
    io::write_commutativity(os, rep);
  }
  io::write_commutativity(std::cout, rep);
  return 0;
}

int cmd_bracket_check(const ExperimentConfig& cfg) {
  write_manifest("bracket-check", cfg);
  std::vector<double> ts = cfg.t_list;
  if (ts.empty()) ts.push_back(cfg.horizon / 3.0);
  auto os = io::open_csv(out_path(cfg, "bracket.csv"));
  os << "N,t,bracket,limit,gap\n";
  for (int n : cfg.n_list) {
    for (double t : ts) {
      const double b = bracket_mn(t, n, cfg.horizon);
      const double lim = t * cfg.horizon * cfg.horizon / 12.0;
      os << n << ',' << io::fmt(t) << ',' << io::fmt(b) << ',' << io::fmt(lim) << ',' << io::fmt(b - lim) << '\n';
    }
  }
  return 0;
}

int cmd_simulate(const ExperimentConfig& cfg) {
  const auto seed = require_seed(cfg);
  write_manifest("simulate", cfg);
  const PreparedModel pm = prepare(cfg);
  RefConfig ref;
  ref.refinement = cfg.ref_refine;
  const int steps = cfg.n_list.back();
  const TimeGrid grid(cfg.horizon, steps);
  const TimeGrid fine = pm.model().exact ? grid : TimeGrid(cfg.horizon, steps * cfg.ref_refine);
  const BrownianPath path = make_path(seed, 0, pm.d(), fine);
  const Trajectory tr = run_scheme(pm, parse_scheme(cfg.scheme), grid, path, ref);
  for (const auto& w : tr.warnings) std::cerr << "warning: " << w << '\n';
  auto os = io::open_csv(out_path(cfg, "trajectory.csv"));
  io::write_trajectory(os, tr);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nvlab: strong-error and error-distribution experiments for Ninomiya-Victoir splitting"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const ExperimentConfig&);
    bool dyadic_n = true;
  };
  const std::vector<Command> commands{
      {"converge", "strong-error rate study (writes rates.csv)", cmd_converge},
      {"errordist", "normalized-error vs limit-SDE distributions", cmd_errordist},
      {"check-commute", "sample-based Lie-bracket commutativity report", cmd_check_commute},
      {"bracket-check", "closed-form predictable bracket vs its limit", cmd_bracket_check, false},
      {"simulate", "single-path trajectory dump (trajectory.csv)", cmd_simulate},
  };
  std::vector<FlagValues> flags(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    subs.push_back(app.add_subcommand(commands[i].name, commands[i].help));
    add_flags(subs.back(), flags[i]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    ExperimentConfig cfg;
    try {
      cfg = load_config(flags[i], commands[i].dyadic_n);
      build_model(cfg);
      parse_scheme(cfg.scheme);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    }
    try {
      return commands[i].run(cfg);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitFailure;
    }
  }
  return kExitFailure;
}
