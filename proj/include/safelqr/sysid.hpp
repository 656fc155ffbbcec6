// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "safelqr/core.hpp"
#include "safelqr/oracle.hpp"

namespace safelqr {

/// Regularized Gram accumulator for z = (x, u) regressing x_next.
/// V = ridge I + sum z z^T, rhs = sum z x_next.
struct GramState {
  double v11 = 1.0;
  double v12 = 0.0;
  double v22 = 1.0;
  double rhs1 = 0.0;
  double rhs2 = 0.0;
  std::int64_t count = 0;
  double ridge = 1.0;

  static GramState fresh(double ridge);

  double det() const { return v11 * v22 - v12 * v12; }
};

GramState gram_update(GramState state, double x, double u, double x_next);

/// V^{-1} rhs via the explicit 2x2 inverse (not clipped).
Dynamics ls_estimate(const GramState& state);

/// Self-normalized bound
/// B_t = alpha sqrt(ln max(det V, 1) + ln(ridge^2) + 2 ln(T^2)) + sqrt(ridge)(a_hi^2 + b_hi^2).
/// Throws ConfigError when the result is not positive.
double self_normalized_bound(const GramState& state, double alpha, const UncertaintyBox& prior, std::int64_t horizon);

/// eps = B_t sqrt(max(V11, V22) / det V), an inf-norm radius.
double confidence_radius(const GramState& state, double alpha, const UncertaintyBox& prior, std::int64_t horizon);

struct ConfidenceEstimate {
  Dynamics theta_hat_pre;
  double eps = 0.0;
  double bound = 0.0;
};

ConfidenceEstimate confidence_estimate(const GramState& state, double alpha, const UncertaintyBox& prior,
                                       std::int64_t horizon);

/// Optimistic point of the confidence box: maximizes a - b K_opt(theta)
/// over a grid x grid lattice (corners included) of
/// ball_to_box(prior.clip(theta_pre), eps, prior).
Dynamics select_optimistic_theta(const Dynamics& theta_pre, double eps, const UncertaintyBox& prior,
                                 const GainOracle& oracle, int grid = 5);

struct Transition {
  std::int64_t t = 0;
  double x = 0.0;
  double u = 0.0;
  double x_next = 0.0;
};

/// CSV with header "t,x,u,x_next"; values printed with 17 significant
/// digits so replay reproduces the Gram state bit for bit.
void write_transitions_csv(std::ostream& out, std::span<const Transition> log);
std::vector<Transition> read_transitions_csv(std::istream& in);
GramState replay(std::span<const Transition> log, double ridge);

}  // namespace safelqr
