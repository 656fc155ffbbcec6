// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "safelqr/analytic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace safelqr {

GainInterval gain_interval(const Dynamics& theta) {
  require_positive_dynamics(theta, "gain interval");
  return {(theta.a - 1.0) / theta.b, theta.a / theta.b};
}

double unconstrained_cost(const Dynamics& theta, double gain, const CostParams& cost, double noise_variance) {
  const auto range = gain_interval(theta);
  if (!range.contains(gain)) {
    throw std::domain_error("unconstrained_cost: gain outside [(a-1)/b, a/b]");
  }
  const double rho = theta.a - theta.b * gain;
  const double denom = 1.0 - rho * rho;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return noise_variance * (cost.q + cost.r * gain * gain) / denom;
}

double f_opt(const Dynamics& theta, const CostParams& cost) {
  require_positive_dynamics(theta, "f_opt");
  const double a = theta.a;
  const double b = theta.b;
  const double q = cost.q;
  const double r = cost.r;
  const double lin = b * b * q + r - a * a * r;
  const double disc = std::sqrt(lin * lin + 4.0 * a * a * b * b * q * r);
  // Same root as (-lin + disc) / (2abr); the rationalized branch avoids
  // cancellation when lin is large and positive.
  if (lin >= 0.0) return 2.0 * a * b * q / (lin + disc);
  return (-lin + disc) / (2.0 * a * b * r);
}

double k_du(const Dynamics& theta, double d_hi, double w_bar) {
  require_positive_dynamics(theta, "k_du");
  if (!std::isfinite(w_bar)) {
    throw std::domain_error("k_du: undefined for unbounded noise");
  }
  if (!(d_hi > 0.0) || !(w_bar >= 0.0)) {
    throw std::domain_error("k_du: need d_hi > 0 and w_bar >= 0");
  }
  return (theta.a - d_hi / (d_hi + w_bar)) / theta.b;
}

GainMargins check_gain_margins(const Dynamics& theta, const CostParams& cost) {
  const double rho = theta.a - theta.b * f_opt(theta, cost);
  return {rho, 1.0 - rho};
}

}  // namespace safelqr
