// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "safelqr/core.hpp"
#include "safelqr/noise.hpp"

namespace safelqr {

/// u = -K x
inline double linear_control(double gain, double x) { return -gain * x; }

/// Linear feedback -K x whose expected next state under the nominal
/// dynamics is clipped into [D_L, D_U]. Safe with probability one for theta.
class TruncatedLinearController {
 public:
  /// Throws ConfigError unless (a-1)/b <= K <= a/b.
  TruncatedLinearController(Dynamics theta, double gain, SafetyBounds bounds);

  double operator()(double x) const;

  const Dynamics& theta() const { return theta_; }
  double gain() const { return gain_; }
  const SafetyBounds& bounds() const { return bounds_; }
  /// a - b K, in [0, 1].
  double closed_loop() const { return closed_loop_; }

 private:
  Dynamics theta_;
  double gain_;
  SafetyBounds bounds_;
  double closed_loop_;
};

double trunc_linear_control(const TruncatedLinearController& c, double x);

/// Deadbeat at the prior center: u = -(a0/b0) x.
double init_control(const UncertaintyBox& prior, double x);

struct InitCheck {
  bool ok = true;
  std::optional<double> first_violation;
  double x_lo = 0.0;
  double x_hi = 0.0;
};

/// Grid check (1000 points) of the initial-controller margin condition
/// D_L + b/ln T <= a x + b C_init(x) <= D_U - b/ln T over the noise-widened
/// state range, for the given true dynamics.
InitCheck validate_init_controller(const UncertaintyBox& prior, const Dynamics& theta_true,
                                   const SafetyBounds& bounds, const NoiseModel& noise, std::int64_t horizon);

struct SafeClampSpec {
  UncertaintyBox ball;
  SafetyBounds bounds;
};

/// Largest u with max over the ball of a x + b u <= D_U.
double safe_upper(const SafeClampSpec& spec, double x);
/// Smallest u with min over the ball of a x + b u >= D_L.
double safe_lower(const SafeClampSpec& spec, double x);

enum class ClampTag { none, upper, lower, infeasible };

std::string to_string(ClampTag tag);

struct ClampResult {
  double u = 0.0;
  ClampTag tag = ClampTag::none;
};

ClampResult clamp_control(double u_nominal, const SafeClampSpec& spec, double x);

}  // namespace safelqr
