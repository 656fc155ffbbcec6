// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>

#include "safelqr/core.hpp"
#include "safelqr/random.hpp"

namespace safelqr {

enum class NoiseKind { uniform, truncated_gaussian, gaussian };

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(const std::string& text);

/// A known, symmetric, zero-mean process noise distribution.
///
/// All derived constants are computed once at construction:
///  - variance: the second moment, threaded through every closed form
///  - support_bound: w-bar, +infinity for the Gaussian
///  - density_bound: sup of the density (attained at 0 for every kind)
///  - subgaussian_alpha: sigma for the Gaussian, w-bar for bounded kinds
class NoiseModel {
 public:
  static NoiseModel uniform(double half_width);
  static NoiseModel gaussian(double sigma);
  /// Gaussian with scale `sigma` conditioned on |w| <= cut (absolute units).
  static NoiseModel truncated_gaussian(double sigma, double cut);

  NoiseKind kind() const { return kind_; }
  /// half-width for uniform, sigma for the Gaussian kinds.
  double param() const { return param_; }
  /// Cut point for the truncated Gaussian; +infinity otherwise.
  double cut() const { return cut_; }

  double variance() const { return variance_; }
  double support_bound() const { return support_; }
  bool bounded() const;
  double density_bound() const { return density_bound_; }
  double subgaussian_alpha() const { return alpha_; }

  double cdf(double w) const;
  /// Inverse CDF on the open interval (0, 1); throws std::domain_error otherwise.
  double quantile(double p) const;

  double sample(Rng& rng) const;
  void fill(Rng& rng, std::span<double> out) const;

 private:
  NoiseModel(NoiseKind kind, double param, double cut);

  NoiseKind kind_;
  double param_;
  double cut_;
  double variance_ = 0.0;
  double support_ = 0.0;
  double density_bound_ = 0.0;
  double alpha_ = 0.0;
  // truncated Gaussian: Phi(-cut/sigma) and the retained mass
  double lower_mass_ = 0.0;
  double kept_mass_ = 1.0;
};

double quantile(const NoiseModel& model, double p);
double subgaussian_alpha(const NoiseModel& model);
double sample(const NoiseModel& model, Rng& rng);

}  // namespace safelqr
