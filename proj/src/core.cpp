// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "safelqr/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace safelqr {

void require_positive_dynamics(const Dynamics& theta, const char* what) {
  if (!(theta.a > 0.0) || !(theta.b > 0.0) || !std::isfinite(theta.a) || !std::isfinite(theta.b)) {
    throw ConfigError(std::string(what) + ": dynamics must satisfy a > 0 and b > 0");
  }
}

UncertaintyBox UncertaintyBox::prior(double a_lo, double a_hi, double b_lo, double b_hi) {
  if (!(a_lo > 0.0) || !(a_hi >= a_lo)) {
    throw ConfigError("prior box: need a_hi >= a_lo > 0");
  }
  if (!(b_lo > 0.0) || !(b_hi >= b_lo)) {
    throw ConfigError("prior box: need b_hi >= b_lo > 0");
  }
  return {a_lo, a_hi, b_lo, b_hi};
}

UncertaintyBox UncertaintyBox::point(const Dynamics& theta) {
  return {theta.a, theta.a, theta.b, theta.b};
}

double UncertaintyBox::size() const { return std::max(a_hi - a_lo, b_hi - b_lo); }

Dynamics UncertaintyBox::center() const { return {0.5 * (a_lo + a_hi), 0.5 * (b_lo + b_hi)}; }

bool UncertaintyBox::contains(const Dynamics& theta) const {
  return a_lo <= theta.a && theta.a <= a_hi && b_lo <= theta.b && theta.b <= b_hi;
}

bool UncertaintyBox::contains(const UncertaintyBox& inner) const {
  return a_lo <= inner.a_lo && inner.a_hi <= a_hi && b_lo <= inner.b_lo && inner.b_hi <= b_hi;
}

Dynamics UncertaintyBox::clip(const Dynamics& theta) const {
  return {std::clamp(theta.a, a_lo, a_hi), std::clamp(theta.b, b_lo, b_hi)};
}

CostParams CostParams::make(double q, double r) {
  if (!(q > 0.0) || !(r > 0.0)) {
    throw ConfigError("cost weights must satisfy q > 0 and r > 0");
  }
  return {q, r};
}

SafetyBounds SafetyBounds::make(double lo, double hi) {
  if (!(lo < 0.0) || !(hi > 0.0)) {
    throw ConfigError("safety bounds must satisfy lo < 0 < hi");
  }
  return {lo, hi};
}

SafetyBounds SafetyBounds::make(double lo, double hi, std::int64_t horizon) {
  auto bounds = make(lo, hi);
  if (horizon < 2) {
    throw ConfigError("safety bounds: horizon must be at least 2");
  }
  if (bounds.width() < 1.0 / std::log(static_cast<double>(horizon))) {
    throw ConfigError("safety bounds: hi - lo must be at least 1/ln(T)");
  }
  return bounds;
}

bool box_contains(const UncertaintyBox& box, const Dynamics& theta) { return box.contains(theta); }

UncertaintyBox ball_to_box(const Dynamics& center, double eps, const UncertaintyBox& prior) {
  if (!(eps >= 0.0)) {
    throw std::domain_error("ball_to_box: radius must be non-negative");
  }
  UncertaintyBox box{std::max(center.a - eps, prior.a_lo), std::min(center.a + eps, prior.a_hi),
                     std::max(center.b - eps, prior.b_lo), std::min(center.b + eps, prior.b_hi)};
  if (box.a_lo > box.a_hi || box.b_lo > box.b_hi) {
    throw ConfidenceBallOutsidePrior("confidence ball outside prior");
  }
  return box;
}

}  // namespace safelqr
