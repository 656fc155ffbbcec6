// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "safelqr/noise.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "safelqr/core.hpp"

namespace safelqr {
namespace {

const boost::math::normal_distribution<double> kStdNormal{0.0, 1.0};

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::uniform:
      return "uniform";
    case NoiseKind::truncated_gaussian:
      return "truncated_gaussian";
    case NoiseKind::gaussian:
      return "gaussian";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(const std::string& text) {
  if (text == "uniform") return NoiseKind::uniform;
  if (text == "truncated_gaussian") return NoiseKind::truncated_gaussian;
  if (text == "gaussian") return NoiseKind::gaussian;
  throw ConfigError("unknown noise.kind '" + text + "'");
}

NoiseModel::NoiseModel(NoiseKind kind, double param, double cut) : kind_(kind), param_(param), cut_(cut) {
  if (!(param > 0.0) || !std::isfinite(param)) {
    throw ConfigError("noise parameter must be positive and finite");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (kind) {
    case NoiseKind::uniform:
      variance_ = param * param / 3.0;
      support_ = param;
      density_bound_ = 0.5 / param;
      alpha_ = param;
      cut_ = inf;
      break;
    case NoiseKind::gaussian:
      variance_ = param * param;
      support_ = inf;
      density_bound_ = phi(0.0) / param;
      alpha_ = param;
      cut_ = inf;
      break;
    case NoiseKind::truncated_gaussian: {
      if (!(cut > 0.0) || !std::isfinite(cut)) {
        throw ConfigError("truncated_gaussian needs a positive finite noise.cut");
      }
      const double k = cut / param;
      lower_mass_ = boost::math::cdf(kStdNormal, -k);
      kept_mass_ = 1.0 - 2.0 * lower_mass_;
      variance_ = param * param * (1.0 - 2.0 * k * phi(k) / kept_mass_);
      support_ = cut;
      density_bound_ = phi(0.0) / (param * kept_mass_);
      alpha_ = cut;
      break;
    }
  }
}

NoiseModel NoiseModel::uniform(double half_width) { return {NoiseKind::uniform, half_width, 0.0}; }

NoiseModel NoiseModel::gaussian(double sigma) { return {NoiseKind::gaussian, sigma, 0.0}; }

NoiseModel NoiseModel::truncated_gaussian(double sigma, double cut) {
  return {NoiseKind::truncated_gaussian, sigma, cut};
}

bool NoiseModel::bounded() const { return std::isfinite(support_); }

double NoiseModel::cdf(double w) const {
  switch (kind_) {
    case NoiseKind::uniform:
      return std::clamp(0.5 * (w / param_ + 1.0), 0.0, 1.0);
    case NoiseKind::gaussian:
      if (std::isinf(w)) return w > 0 ? 1.0 : 0.0;
      return boost::math::cdf(kStdNormal, w / param_);
    case NoiseKind::truncated_gaussian:
      if (w <= -cut_) return 0.0;
      if (w >= cut_) return 1.0;
      return (boost::math::cdf(kStdNormal, w / param_) - lower_mass_) / kept_mass_;
  }
  return 0.0;
}

double NoiseModel::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("quantile: p must lie in (0, 1)");
  }
  switch (kind_) {
    case NoiseKind::uniform:
      return param_ * (2.0 * p - 1.0);
    case NoiseKind::gaussian:
      return param_ * boost::math::quantile(kStdNormal, p);
    case NoiseKind::truncated_gaussian: {
      const double z = boost::math::quantile(kStdNormal, lower_mass_ + p * kept_mass_);
      return std::clamp(param_ * z, -cut_, cut_);
    }
  }
  return 0.0;
}

double NoiseModel::sample(Rng& rng) const {
  switch (kind_) {
    case NoiseKind::uniform:
      return param_ * (2.0 * rng.uniform01() - 1.0);
    case NoiseKind::gaussian: {
      // Box-Muller, cosine branch only; keeps the generator stateless.
      const double u1 = rng.uniform_open();
      const double u2 = rng.uniform01();
      return param_ * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    case NoiseKind::truncated_gaussian:
      return quantile(rng.uniform_open());
  }
  return 0.0;
}

void NoiseModel::fill(Rng& rng, std::span<double> out) const {
  for (auto& w : out) w = sample(rng);
}

double quantile(const NoiseModel& model, double p) { return model.quantile(p); }

double subgaussian_alpha(const NoiseModel& model) { return model.subgaussian_alpha(); }

double sample(const NoiseModel& model, Rng& rng) { return model.sample(rng); }

}  // namespace safelqr
