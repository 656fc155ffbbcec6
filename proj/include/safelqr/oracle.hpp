// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include "safelqr/control.hpp"
#include "safelqr/core.hpp"
#include "safelqr/noise.hpp"

namespace safelqr {

class DivergedTrajectory : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// State-feedback policy u = C(x).
using Controller = std::function<double(double)>;

struct RolloutResult {
  double total_cost = 0.0;
  std::vector<double> states;    // x_0 .. x_T
  std::vector<double> controls;  // u_0 .. u_{T-1}
  std::vector<double> safety_margins;  // a x_t + b u_t under the simulated plant
};

/// Simulates T steps of the plant driven by `noise` and accumulates
/// q x_T^2 + sum_{t<T} (q x_t^2 + r u_t^2).
RolloutResult rollout(const Dynamics& plant, const CostParams& cost, const Controller& controller, std::int64_t horizon,
                      double x0, std::span<const double> noise);

/// Which steps are charged. `finite` is the T-step cost with terminal
/// penalty; `stationary` discards a burn-in and drops the terminal term,
/// which is the long-horizon proxy for the infinite-horizon average.
struct Horizon {
  std::int64_t steps = 0;
  std::int64_t burn_in = 0;
  bool terminal = true;

  static Horizon finite(std::int64_t steps) { return {steps, 0, true}; }
  static Horizon stationary(std::int64_t steps, std::int64_t burn_in) { return {steps, burn_in, false}; }
  std::int64_t length() const { return steps + burn_in; }
};

/// Allocation-free cost accumulation; throws DivergedTrajectory on overflow.
template <class Policy>
double simulate_cost(const Dynamics& plant, const CostParams& cost, Policy&& policy, const Horizon& horizon, double x0,
                     std::span<const double> noise) {
  if (static_cast<std::int64_t>(noise.size()) < horizon.length()) {
    throw std::invalid_argument("simulate_cost: noise sequence shorter than horizon");
  }
  double x = x0;
  double total = 0.0;
  for (std::int64_t t = 0; t < horizon.length(); ++t) {
    const double u = policy(x);
    if (t >= horizon.burn_in) total += cost.q * x * x + cost.r * u * u;
    x = plant.a * x + plant.b * u + noise[static_cast<std::size_t>(t)];
  }
  if (horizon.terminal) total += cost.q * x * x;
  if (!std::isfinite(total)) throw DivergedTrajectory("trajectory diverged");
  return total;
}

struct CostEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  int reps = 0;

  static CostEstimate from_samples(std::span<const double> samples);
};

/// Common-random-number noise: `reps` independent streams of fixed length.
class NoiseBank {
 public:
  NoiseBank(const NoiseModel& model, int reps, std::int64_t length, std::uint64_t seed);

  std::span<const double> stream(int rep) const;
  int reps() const { return reps_; }
  std::int64_t length() const { return length_; }

 private:
  int reps_;
  std::int64_t length_;
  std::vector<double> data_;
};

/// Mean and standard error of the total cost over independent streams
/// derived from `seed`. Identical seed gives a bit-identical estimate.
CostEstimate estimate_cost(const Dynamics& plant, const CostParams& cost, const Controller& controller,
                           const Horizon& horizon, double x0, int reps, std::uint64_t seed, const NoiseModel& noise);
/// Same, on a caller-supplied bank (common random numbers).
CostEstimate estimate_cost(const Dynamics& plant, const CostParams& cost, const Controller& controller,
                           const Horizon& horizon, double x0, const NoiseBank& bank);

/// Per-stream sufficient statistics of the nominal closed loop
/// x' = clip(rho x, D_L, D_U) + w, with y = clip(rho x).
struct LoopMoments {
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  double terminal = 0.0;  // x_T^2, zero for stationary horizons
};

/// Monte Carlo cost of every truncated linear controller under its own
/// nominal dynamics, on one shared set of noise streams.
///
/// Under nominal dynamics theta the closed loop depends on (a, b, K) only
/// through rho = a - bK, and u = (y - a x)/b. The moments above are
/// therefore theta-independent and every J(theta, C_K^theta) follows by
/// arithmetic. Moments are memoized per rho. With lattice_cells > 0 they
/// are computed lazily on the lattice rho = i/cells and linearly
/// interpolated in between; with 0, each requested rho is simulated exactly.
///
/// Thread-safe; results do not depend on evaluation order.
class TruncatedCostProfile {
 public:
  TruncatedCostProfile(SafetyBounds bounds, const NoiseModel& noise, Horizon horizon, int reps, std::uint64_t seed,
                       int lattice_cells = 0, double x0 = 0.0);

  /// Total-cost estimate of C_K^theta under theta.
  CostEstimate cost(const Dynamics& theta, const CostParams& weights, double gain) const;
  /// Same, parameterized by the closed-loop coefficient rho in [0, 1].
  CostEstimate cost_at_rho(const Dynamics& theta, const CostParams& weights, double rho) const;
  double mean_cost_at_rho(const Dynamics& theta, const CostParams& weights, double rho) const;

  const Horizon& horizon() const { return horizon_; }
  const SafetyBounds& bounds() const { return bounds_; }
  int reps() const { return bank_.reps(); }
  int lattice_cells() const { return cells_; }

 private:
  using Moments = std::vector<LoopMoments>;

  std::vector<LoopMoments> simulate(double rho) const;
  const Moments& exact(double rho) const;
  const Moments& node(int i) const;
  template <class Fn>
  void for_each_rep(double rho, Fn&& fn) const;

  SafetyBounds bounds_;
  Horizon horizon_;
  double x0_;
  NoiseBank bank_;
  int cells_;

  mutable std::mutex mutex_;
  mutable std::map<double, std::unique_ptr<Moments>> exact_;
  mutable std::unique_ptr<std::once_flag[]> node_once_;
  mutable std::vector<Moments> nodes_;
};

struct GainSearchResult {
  double gain = 0.0;
  CostEstimate cost;
};

/// Minimizing gain over [(a-1)/b, a/b]: a coarse grid (ties go to the
/// smallest gain) refined by golden-section search to `tol` in gain units.
GainSearchResult k_opt_search(const Dynamics& theta, const CostParams& cost, const TruncatedCostProfile& profile,
                              double tol, int grid_points = 33);

/// Convenience form: finite horizon `eval_horizon` from x0 = 0 with exact
/// CRN evaluation on streams derived from `seed`.
GainSearchResult k_opt_search(const Dynamics& theta, const SafetyBounds& bounds, const CostParams& cost,
                              const NoiseModel& noise, std::int64_t eval_horizon, int reps, double tol,
                              std::uint64_t seed);

struct OracleSettings {
  std::int64_t min_eval_horizon = 4096;
  std::int64_t burn_in = 256;
  int reps = 64;
  double tol = 1e-3;
  int grid_points = 33;
  int lattice_cells = 2048;

  /// Stationary proxy horizon max(min_eval_horizon, sqrt(T)).
  Horizon proxy_horizon(std::int64_t run_horizon) const;
};

/// Infinite-horizon K_opt(theta) proxy shared by all learners of one
/// experiment. The noise streams are fixed by the seed, so K_opt is a
/// deterministic function of theta.
class GainOracle {
 public:
  GainOracle(const SafetyBounds& bounds, const CostParams& cost, const NoiseModel& noise,
             const OracleSettings& settings, std::int64_t run_horizon, std::uint64_t seed);

  double k_opt(const Dynamics& theta) const;
  GainSearchResult search(const Dynamics& theta) const;
  const OracleSettings& settings() const { return settings_; }
  const TruncatedCostProfile& profile() const { return profile_; }

 private:
  CostParams cost_;
  OracleSettings settings_;
  TruncatedCostProfile profile_;
};

struct BaselineResult {
  double gain = 0.0;
  CostEstimate search;    // on the search streams
  CostEstimate estimate;  // on fresh streams; this is the regret baseline
};

/// Best truncated linear controller for the true dynamics over T steps,
/// re-estimated on streams independent of the search streams.
BaselineResult baseline_cost(const Dynamics& theta_true, const SafetyBounds& bounds, const CostParams& cost,
                             const NoiseModel& noise, std::int64_t horizon, int reps, std::uint64_t seed,
                             double tol = 1e-3);

}  // namespace safelqr
