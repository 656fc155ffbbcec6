// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: run, sweep, baseline, verify.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "safelqr/config.hpp"
#include "safelqr/harness.hpp"
#include "safelqr/learner.hpp"

namespace fs = std::filesystem;
using namespace safelqr;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  int workers = 1;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "Config file (flat key = value)");
  cmd->add_option("--seed", f.seed, "Root seed; overrides the config");
  cmd->add_option("--reps", f.reps, "Replications; overrides the config");
  cmd->add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out_dir, "Output directory");
}

ExperimentConfig load(const CommonFlags& f) {
  auto config = f.config_path.empty() ? ExperimentConfig{} : load_config(f.config_path);
  if (f.seed) config.seed = *f.seed;
  if (f.reps) config.replications = *f.reps;
  config.validate();
  return config;
}

std::ofstream open_out(const CommonFlags& f, const std::string& name) {
  fs::create_directories(f.out_dir);
  std::ofstream out(fs::path(f.out_dir) / name);
  if (!out) throw std::runtime_error("cannot write " + (fs::path(f.out_dir) / name).string());
  return out;
}

int cmd_run(const CommonFlags& f, int rep) {
  const auto config = load(f);
  BaselineCache baselines;
  OracleCache oracles;
  const auto run = config.policy == PolicyKind::algorithm
                       ? run_algorithm(config, static_cast<std::uint64_t>(rep), oracles.get(config))
                       : run_init_only(config, static_cast<std::uint64_t>(rep));
  auto trace = open_out(f, "trace.csv");
  write_trace_csv(trace, run.trace);
  const auto report = run_replication(config, rep, baselines, oracles);
  auto json = open_out(f, "report.json");
  write_report_json(json, report);
  write_report_json(std::cout, report);
  return 0;
}

int cmd_sweep(const CommonFlags& f) {
  const auto config = load(f);
  if (config.sweep_horizons.empty()) throw ConfigError("sweep needs sweep.horizons in the config");
  const auto sweep = sweep_regret(config, config.sweep_horizons, config.replications, f.workers);
  auto csv = open_out(f, "sweep.csv");
  write_sweep_csv(csv, sweep);
  auto json = open_out(f, "summary.json");
  write_sweep_summary_json(json, sweep);
  write_sweep_summary_json(std::cout, sweep);
  return 0;
}

int cmd_baseline(const CommonFlags& f) {
  const auto config = load(f);
  BaselineCache baselines;
  const auto& b = baselines.get(config);
  auto json = open_out(f, "baseline.json");
  write_baseline_json(json, b);
  write_baseline_json(std::cout, b);
  return 0;
}

int cmd_verify(const CommonFlags& f) {
  const auto config = load(f);
  VerifyOptions options;
  options.seed = config.seed;
  const auto checks = verify_suite(config, options);
  write_checks_table(std::cout, checks);
  auto csv = open_out(f, "verify.csv");
  write_checks_table(csv, checks);
  return all_passed(checks) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe LQR learner with expected-state constraints"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CommonFlags sweep_flags;
  CommonFlags baseline_flags;
  CommonFlags verify_flags;
  int rep = 0;

  auto* run = app.add_subcommand("run", "Single replication: trace CSV and regret report JSON");
  add_common(run, run_flags);
  run->add_option("--rep", rep, "Replication index");
  auto* sweep = app.add_subcommand("sweep", "Regret sweep over sweep.horizons: CSV and summary JSON");
  add_common(sweep, sweep_flags);
  auto* baseline = app.add_subcommand("baseline", "Known-dynamics optimal gain and cost");
  add_common(baseline, baseline_flags);
  auto* verify = app.add_subcommand("verify", "Property checks as a pass/fail table");
  add_common(verify, verify_flags);

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(run_flags, rep);
    if (sweep->parsed()) return cmd_sweep(sweep_flags);
    if (baseline->parsed()) return cmd_baseline(baseline_flags);
    if (verify->parsed()) return cmd_verify(verify_flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
