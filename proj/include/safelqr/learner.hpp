// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "safelqr/config.hpp"
#include "safelqr/control.hpp"
#include "safelqr/oracle.hpp"
#include "safelqr/random.hpp"
#include "safelqr/sysid.hpp"

namespace safelqr {

enum class Phase { warmup, epoch };
enum class Branch { unset, small_noise, large_noise };
enum class NominalKind { unconstrained_linear, truncated_linear };

std::string to_string(Phase phase);
std::string to_string(Branch branch);
std::string to_string(NominalKind kind);

/// Everything fixed at the start of one epoch.
struct EpochPlan {
  int index = 0;
  std::int64_t start = 0;
  std::int64_t length = 0;
  Dynamics theta_pre;
  Dynamics theta_hat;
  double eps = 0.0;
  double gain = 0.0;
  NominalKind kind = NominalKind::truncated_linear;
  UncertaintyBox clamp_ball;
};

struct IncidentCounts {
  std::int64_t none = 0;
  std::int64_t upper = 0;
  std::int64_t lower = 0;
  std::int64_t infeasible = 0;

  void add(ClampTag tag);
  std::int64_t clamped() const { return upper + lower; }
};

/// Warm-up length ceil(sqrt(T)).
std::int64_t warmup_length(std::int64_t horizon);

/// Epoch s starts at T0 2^s and lasts T0 2^s steps; the last one is cut at T.
std::vector<std::pair<std::int64_t, std::int64_t>> epoch_schedule(std::int64_t horizon);

/// The switch quantity w-bar + D_U - D_U/(a - b F_opt(theta)). Returns
/// nullopt for unbounded noise or a non-positive closed-loop coefficient.
std::optional<double> switch_quantity(const Dynamics& theta_wu, const CostParams& cost, double d_hi, double w_bar);

/// The truncated-linear safe LQR learner as a single-owner state machine.
/// It only sees observed transitions; the true dynamics never reach it.
class SafeLqrLearner {
 public:
  SafeLqrLearner(LearnerConfig config, std::shared_ptr<const GainOracle> oracle);

  /// Initial controller plus a Rademacher dither of size 1/ln T, clamped to
  /// be safe for every theta in the prior.
  ClampResult warmup_control(double x, Rng& rng);
  int last_dither() const { return last_dither_; }

  void observe(double x, double u, double x_next);

  /// Requires exactly T0 absorbed transitions. Fixes theta_wu and the branch.
  void finish_warmup();

  /// Requires exactly T0 2^s absorbed transitions.
  const EpochPlan& epoch_setup(int s);

  /// Installs a hand-built plan (used to probe the clamp logic directly).
  void install_plan(const EpochPlan& plan);

  ClampResult exploit_control(double x);

  Phase phase() const { return phase_; }
  Branch branch() const { return branch_; }
  std::optional<double> switch_value() const { return switch_value_; }
  const Dynamics& theta_wu() const { return theta_wu_; }
  const GramState& gram() const { return gram_; }
  const EpochPlan& current() const { return current_; }
  const std::vector<EpochPlan>& epochs() const { return epochs_; }
  const IncidentCounts& incidents() const { return incidents_; }
  std::int64_t warmup_steps() const { return t0_; }
  const LearnerConfig& config() const { return config_; }

 private:
  LearnerConfig config_;
  std::shared_ptr<const GainOracle> oracle_;
  std::int64_t t0_;
  double dither_scale_;

  Phase phase_ = Phase::warmup;
  Branch branch_ = Branch::unset;
  GramState gram_;
  Dynamics theta_wu_;
  std::optional<double> switch_value_;
  double small_noise_gain_ = 0.0;
  double eps0_ = 0.0;
  EpochPlan current_;
  std::optional<TruncatedLinearController> nominal_;
  std::vector<EpochPlan> epochs_;
  IncidentCounts incidents_;
  int last_dither_ = 0;
};

struct StepRecord {
  std::int64_t t = 0;
  double x = 0.0;
  double u = 0.0;
  ClampTag tag = ClampTag::none;
  Phase phase = Phase::warmup;
  int epoch = -1;
  double eps = 0.0;
  Dynamics theta_hat;
  double margin_true = 0.0;
  int dither = 0;
};

struct AlgTrace {
  std::vector<StepRecord> steps;
  std::vector<EpochPlan> epochs;
  Branch branch = Branch::unset;
  std::optional<double> switch_value;
  Dynamics theta_wu;
  std::int64_t warmup_length = 0;
  IncidentCounts incidents;
  std::vector<Transition> transitions;
  std::int64_t violations = 0;  // steps with a* x + b* u outside [D_L, D_U]
  bool diverged = false;
};

struct RunResult {
  RolloutResult rollout;
  AlgTrace trace;
};

/// Runs one replication: the plant uses config.theta_true and noise from
/// (config.seed, rep); the learner sees only observed transitions. Throws
/// ConfigError if the initial controller fails its margin check. A diverged
/// trajectory returns the trace so far with `diverged` set.
RunResult run_algorithm(const ExperimentConfig& config, std::uint64_t rep, std::shared_ptr<const GainOracle> oracle);

/// Control group: the initial controller for all T steps, no learning.
RunResult run_init_only(const ExperimentConfig& config, std::uint64_t rep);

std::shared_ptr<const GainOracle> make_gain_oracle(const ExperimentConfig& config);

/// Columns: t,x,u,tag,phase,epoch,eps_s,theta_hat_a,theta_hat_b,margin_true.
void write_trace_csv(std::ostream& out, const AlgTrace& trace);

}  // namespace safelqr
