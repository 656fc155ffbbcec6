// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "safelqr/config.hpp"
#include "safelqr/learner.hpp"
#include "safelqr/oracle.hpp"

namespace safelqr {

/// One replication scored against the known-dynamics baseline.
struct RegretReport {
  std::int64_t horizon = 0;
  int rep = 0;
  double alg_total_cost = 0.0;
  double baseline_mean = 0.0;
  double baseline_stderr = 0.0;
  double regret = 0.0;
  /// Steps whose true expected next state left [D_L, D_U]; -1 marks a diverged run.
  std::int64_t violations = 0;
  std::int64_t infeasible_clamps = 0;
  Branch branch = Branch::unset;
  bool diverged = false;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

/// Ordinary least squares of y on x. Needs at least two distinct x values.
SlopeFit fit_line(std::span<const double> x, std::span<const double> y);

/// Floor applied to median regret before taking logs.
inline constexpr double kRegretFloor = 1.0;

struct SweepResult {
  std::vector<RegretReport> rows;  // sorted by (T, rep)
  std::vector<std::int64_t> horizons;
  std::vector<double> median_regret;
  double fitted_slope = 0.0;
  double slope_stderr = 0.0;
};

/// Baseline costs keyed by horizon. Safe to share across worker threads; each
/// horizon is computed once.
class BaselineCache {
 public:
  const BaselineResult& get(const ExperimentConfig& config);

 private:
  struct Slot {
    std::once_flag once;
    BaselineResult value;
  };
  std::mutex mutex_;
  std::map<std::int64_t, std::unique_ptr<Slot>> slots_;
};

/// Gain oracles keyed by proxy horizon, so sweeps over T share one profile.
class OracleCache {
 public:
  std::shared_ptr<const GainOracle> get(const ExperimentConfig& config);

 private:
  std::mutex mutex_;
  std::map<std::int64_t, std::shared_ptr<const GainOracle>> oracles_;
};

RegretReport run_replication(const ExperimentConfig& config, int rep, BaselineCache& baselines,
                             OracleCache& oracles);

/// Replications for every (T, rep) pair on `workers` threads. The result does
/// not depend on the worker count.
SweepResult sweep_regret(const ExperimentConfig& base, std::span<const std::int64_t> horizons, int reps, int workers);

/// Median regret per horizon, floored, then a log-log least-squares fit.
void fit_sweep(SweepResult& sweep);

// --- continuity probes --------------------------------------------------------

struct ProbeRow {
  double size = 0.0;   // epsilon or delta
  double delta = 0.0;  // |difference| (median for the state probe)
  double ratio = 0.0;  // delta / size, 0 when size == 0
  double std_err = 0.0;
};

struct ProbeTable {
  std::vector<ProbeRow> rows;
  /// max/min ratio over rows with size > 0.
  double band() const;
};

struct ThetaProbeSettings {
  std::int64_t horizon = 4096;
  int reps = 64;
  double tol = 1e-5;
  std::uint64_t seed = 1;
  /// Perturbation direction; scaled so that the infinity norm equals epsilon.
  Dynamics direction{1.0, -1.0};
};

/// Average-cost gap under theta_star between C^theta_{K_opt(theta)} and
/// C^{theta_star}_{K_opt(theta_star)}, on common noise.
ProbeTable probe_continuity_in_theta(const Dynamics& theta_star, const SafetyBounds& bounds, const CostParams& cost,
                                     const NoiseModel& noise, std::span<const double> perturbations,
                                     const ThetaProbeSettings& settings = {});

struct StateProbeSettings {
  std::int64_t horizon = 4096;
  int reps = 64;
  double start = 0.5;
  std::uint64_t seed = 1;
};

struct StateProbe {
  ProbeTable table;
  /// First step at which the state gap falls below its initial value, per
  /// the largest delta; -1 when it never does.
  std::int64_t contraction_steps = -1;
};

/// Total-cost gap of C^theta_K started at x and x + delta on one shared noise
/// sequence per replication.
StateProbe probe_continuity_in_state(const Dynamics& theta, double gain, const SafetyBounds& bounds,
                                     const CostParams& cost, const NoiseModel& noise, std::span<const double> deltas,
                                     const StateProbeSettings& settings = {});

// --- verification suite -------------------------------------------------------

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  /// Replaceable for mutation testing.
  std::function<double(const Dynamics&, const CostParams&)> f_opt_impl;
};

std::vector<CheckResult> verify_suite(const ExperimentConfig& config, const VerifyOptions& options = {});
bool all_passed(std::span<const CheckResult> checks);

// --- output -------------------------------------------------------------------

/// Columns: T,rep,regret,violations,branch.
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
void write_sweep_summary_json(std::ostream& out, const SweepResult& sweep);
void write_report_json(std::ostream& out, const RegretReport& report);
void write_baseline_json(std::ostream& out, const BaselineResult& baseline);
void write_checks_table(std::ostream& out, std::span<const CheckResult> checks);

/// 12 significant digits, shortest round form.
std::string format_real(double v);

}  // namespace safelqr
