// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace safelqr {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an inf-norm ball does not meet the prior box at all.
class ConfidenceBallOutsidePrior : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Scalar plant x' = a x + b u + w. Estimates share this type, so the
/// positivity requirement is only enforced where a true system is expected.
struct Dynamics {
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const Dynamics&, const Dynamics&) = default;
};

void require_positive_dynamics(const Dynamics& theta, const char* what);

struct UncertaintyBox {
  double a_lo = 0.0;
  double a_hi = 0.0;
  double b_lo = 0.0;
  double b_hi = 0.0;

  /// Validating constructor for prior boxes (both ranges strictly positive).
  static UncertaintyBox prior(double a_lo, double a_hi, double b_lo, double b_hi);
  /// Degenerate box holding one point.
  static UncertaintyBox point(const Dynamics& theta);

  double size() const;
  Dynamics center() const;
  bool contains(const Dynamics& theta) const;
  bool contains(const UncertaintyBox& inner) const;
  Dynamics clip(const Dynamics& theta) const;

  friend bool operator==(const UncertaintyBox&, const UncertaintyBox&) = default;
};

struct CostParams {
  double q = 1.0;
  double r = 1.0;

  static CostParams make(double q, double r);
};

/// Boundaries on the conditional mean of the next state.
struct SafetyBounds {
  double lo = -1.0;
  double hi = 1.0;

  /// Checks lo < 0 < hi.
  static SafetyBounds make(double lo, double hi);
  /// Additionally checks hi - lo >= 1/ln(horizon).
  static SafetyBounds make(double lo, double hi, std::int64_t horizon);

  double width() const { return hi - lo; }
  bool admits(double expected_next) const { return lo <= expected_next && expected_next <= hi; }
};

bool box_contains(const UncertaintyBox& box, const Dynamics& theta);

/// Inf-norm ball of radius eps around `center`, intersected with `prior`.
/// Throws ConfidenceBallOutsidePrior if the intersection is empty.
UncertaintyBox ball_to_box(const Dynamics& center, double eps, const UncertaintyBox& prior);

}  // namespace safelqr
