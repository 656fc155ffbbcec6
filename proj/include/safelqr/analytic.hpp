// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "safelqr/core.hpp"

namespace safelqr {

/// Gains of the truncated-linear class: [(a-1)/b, a/b].
struct GainInterval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double k) const { return lo <= k && k <= hi; }
  double width() const { return hi - lo; }
};

GainInterval gain_interval(const Dynamics& theta);

/// Infinite-horizon average cost of u = -K x without truncation:
/// sigma^2 (q + r K^2) / (1 - (a - bK)^2), +infinity when a - bK = 1.
/// Throws std::domain_error when K is outside the gain interval.
double unconstrained_cost(const Dynamics& theta, double gain, const CostParams& cost, double noise_variance);

/// Minimizer of unconstrained_cost: the positive root of
/// a b r K^2 + (b^2 q + r - a^2 r) K - a b q = 0.
double f_opt(const Dynamics& theta, const CostParams& cost);

/// Gain whose truncation threshold D_U/(a - bK) sits exactly w-bar above D_U.
/// Throws std::domain_error for unbounded noise.
double k_du(const Dynamics& theta, double d_hi, double w_bar);

struct GainMargins {
  double lo = 0.0;  // a - b F_opt
  double hi = 0.0;  // 1 - (a - b F_opt)

  bool strictly_positive(double tol = 1e-12) const { return lo > tol && hi > tol; }
};

GainMargins check_gain_margins(const Dynamics& theta, const CostParams& cost);

}  // namespace safelqr
