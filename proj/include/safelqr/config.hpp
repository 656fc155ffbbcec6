// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "safelqr/core.hpp"
#include "safelqr/noise.hpp"
#include "safelqr/oracle.hpp"

namespace safelqr {

/// Everything the learner may see. The true dynamics are deliberately absent.
struct LearnerConfig {
  std::int64_t horizon = 0;
  UncertaintyBox prior;
  CostParams cost;
  SafetyBounds bounds;
  NoiseModel noise = NoiseModel::uniform(1.0);
  double ridge = 1.0;
  double c_switch = 1.0;
  int optimism_grid = 5;
};

enum class PolicyKind { algorithm, init_only };

std::string to_string(PolicyKind kind);

struct ExperimentConfig {
  std::int64_t horizon = 4096;
  Dynamics theta_true{1.0, 1.0};
  UncertaintyBox prior{0.9, 1.1, 0.9, 1.1};
  CostParams cost;
  SafetyBounds bounds{-1.0, 1.0};
  NoiseModel noise = NoiseModel::uniform(1.0);
  double ridge = 1.0;
  /// Unset means 1.0 * bounds.hi.
  std::optional<double> c_switch;
  std::uint64_t seed = 1;
  int replications = 1;
  OracleSettings oracle;
  int optimism_grid = 5;
  int baseline_reps = 64;
  PolicyKind policy = PolicyKind::algorithm;
  std::vector<std::int64_t> sweep_horizons;

  double c_switch_value() const { return c_switch.value_or(bounds.hi); }
  LearnerConfig learner() const;
  ExperimentConfig with_horizon(std::int64_t t) const;

  /// Throws ConfigError on the first violated invariant.
  void validate() const;
};

/// Flat "key = value" text; '#' starts a comment. Unknown keys are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Writes every key so that parse_config(write_config(c)) == c.
void write_config(std::ostream& out, const ExperimentConfig& config);

}  // namespace safelqr
