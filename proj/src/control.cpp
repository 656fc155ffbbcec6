// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "safelqr/control.hpp"

#include <algorithm>
#include <cmath>

namespace safelqr {
namespace {

// Largest u with max_{theta in ball} (a x + b u) <= bound. The a-term peaks at
// a_hi for x >= 0 and a_lo otherwise; the b-term peaks at b_hi when u >= 0
// and at b_lo when u < 0, so the sign of the slack picks the divisor.
double upper_limit(const UncertaintyBox& ball, double x, double bound) {
  const double a_worst = x >= 0.0 ? ball.a_hi : ball.a_lo;
  const double slack = bound - a_worst * x;
  if (slack == 0.0) return 0.0;
  return slack > 0.0 ? slack / ball.b_hi : slack / ball.b_lo;
}

}  // namespace

TruncatedLinearController::TruncatedLinearController(Dynamics theta, double gain, SafetyBounds bounds)
    : theta_(theta), gain_(gain), bounds_(bounds), closed_loop_(theta.a - theta.b * gain) {
  require_positive_dynamics(theta, "truncated linear controller");
  const double lo = (theta.a - 1.0) / theta.b;
  const double hi = theta.a / theta.b;
  if (!(gain >= lo && gain <= hi)) {
    throw ConfigError("truncated linear controller: gain outside [(a-1)/b, a/b]");
  }
  closed_loop_ = std::clamp(closed_loop_, 0.0, 1.0);
}

double TruncatedLinearController::operator()(double x) const {
  const double next = closed_loop_ * x;
  if (next > bounds_.hi) return (bounds_.hi - theta_.a * x) / theta_.b;
  if (next < bounds_.lo) return (bounds_.lo - theta_.a * x) / theta_.b;
  return -gain_ * x;
}

double trunc_linear_control(const TruncatedLinearController& c, double x) { return c(x); }

double init_control(const UncertaintyBox& prior, double x) {
  const auto c = prior.center();
  return -(c.a / c.b) * x;
}

InitCheck validate_init_controller(const UncertaintyBox& prior, const Dynamics& theta_true,
                                   const SafetyBounds& bounds, const NoiseModel& noise, std::int64_t horizon) {
  const double t = static_cast<double>(horizon);
  const double tail = 1.0 / (t * t * t * t);
  InitCheck check;
  check.x_lo = bounds.lo + noise.quantile(tail);
  // Every noise model is symmetric; 1 - tail rounds to 1 for large T.
  check.x_hi = bounds.hi - noise.quantile(tail);
  const double margin = theta_true.b / std::log(t);
  constexpr int kPoints = 1000;
  for (int i = 0; i < kPoints; ++i) {
    const double x = check.x_lo + (check.x_hi - check.x_lo) * i / (kPoints - 1);
    const double next = theta_true.a * x + theta_true.b * init_control(prior, x);
    if (next < bounds.lo + margin || next > bounds.hi - margin) {
      check.ok = false;
      check.first_violation = x;
      break;
    }
  }
  return check;
}

double safe_upper(const SafeClampSpec& spec, double x) { return upper_limit(spec.ball, x, spec.bounds.hi); }

double safe_lower(const SafeClampSpec& spec, double x) {
  // min (a x + b u) >= D_L  <=>  max (a(-x) + b(-u)) <= -D_L
  return -upper_limit(spec.ball, -x, -spec.bounds.lo);
}

std::string to_string(ClampTag tag) {
  switch (tag) {
    case ClampTag::none:
      return "none";
    case ClampTag::upper:
      return "upper";
    case ClampTag::lower:
      return "lower";
    case ClampTag::infeasible:
      return "infeasible";
  }
  return "unknown";
}

ClampResult clamp_control(double u_nominal, const SafeClampSpec& spec, double x) {
  const double hi = safe_upper(spec, x);
  const double lo = safe_lower(spec, x);
  if (lo > hi) return {0.5 * (lo + hi), ClampTag::infeasible};
  if (u_nominal > hi) return {hi, ClampTag::upper};
  if (u_nominal < lo) return {lo, ClampTag::lower};
  return {u_nominal, ClampTag::none};
}

}  // namespace safelqr
