// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "safelqr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "safelqr/analytic.hpp"
#include "safelqr/random.hpp"

namespace safelqr {

RolloutResult rollout(const Dynamics& plant, const CostParams& cost, const Controller& controller, std::int64_t horizon,
                      double x0, std::span<const double> noise) {
  if (horizon < 0 || static_cast<std::int64_t>(noise.size()) < horizon) {
    throw std::invalid_argument("rollout: noise sequence shorter than horizon");
  }
  RolloutResult out;
  const auto n = static_cast<std::size_t>(horizon);
  out.states.reserve(n + 1);
  out.controls.reserve(n);
  out.safety_margins.reserve(n);
  double x = x0;
  out.states.push_back(x);
  for (std::size_t t = 0; t < n; ++t) {
    const double u = controller(x);
    const double mean_next = plant.a * x + plant.b * u;
    out.total_cost += cost.q * x * x + cost.r * u * u;
    out.controls.push_back(u);
    out.safety_margins.push_back(mean_next);
    x = mean_next + noise[t];
    if (!std::isfinite(x)) throw DivergedTrajectory("rollout diverged at step " + std::to_string(t));
    out.states.push_back(x);
  }
  out.total_cost += cost.q * x * x;
  return out;
}

CostEstimate CostEstimate::from_samples(std::span<const double> samples) {
  CostEstimate est;
  est.reps = static_cast<int>(samples.size());
  if (samples.empty()) return est;
  const double n = static_cast<double>(samples.size());
  est.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() >= 2) {
    double ss = 0.0;
    for (double s : samples) ss += (s - est.mean) * (s - est.mean);
    est.std_err = std::sqrt(ss / (n - 1.0) / n);
  }
  return est;
}

NoiseBank::NoiseBank(const NoiseModel& model, int reps, std::int64_t length, std::uint64_t seed)
    : reps_(reps), length_(length) {
  if (reps < 1 || length < 0) throw std::invalid_argument("NoiseBank: need reps >= 1 and length >= 0");
  data_.resize(static_cast<std::size_t>(reps) * static_cast<std::size_t>(length));
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(rep)}));
    model.fill(rng, std::span<double>(data_).subspan(static_cast<std::size_t>(rep) * length_, length_));
  }
}

std::span<const double> NoiseBank::stream(int rep) const {
  return std::span<const double>(data_).subspan(static_cast<std::size_t>(rep) * length_, length_);
}

CostEstimate estimate_cost(const Dynamics& plant, const CostParams& cost, const Controller& controller,
                           const Horizon& horizon, double x0, int reps, std::uint64_t seed, const NoiseModel& noise) {
  if (reps < 2) throw std::invalid_argument("estimate_cost: need reps >= 2");
  std::vector<double> totals(static_cast<std::size_t>(reps));
  std::vector<double> w(static_cast<std::size_t>(horizon.length()));
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(derive_seed(seed, {stream::evaluation, static_cast<std::uint64_t>(rep)}));
    noise.fill(rng, w);
    totals[static_cast<std::size_t>(rep)] = simulate_cost(plant, cost, controller, horizon, x0, w);
  }
  return CostEstimate::from_samples(totals);
}

CostEstimate estimate_cost(const Dynamics& plant, const CostParams& cost, const Controller& controller,
                           const Horizon& horizon, double x0, const NoiseBank& bank) {
  std::vector<double> totals(static_cast<std::size_t>(bank.reps()));
  for (int rep = 0; rep < bank.reps(); ++rep) {
    totals[static_cast<std::size_t>(rep)] = simulate_cost(plant, cost, controller, horizon, x0, bank.stream(rep));
  }
  return CostEstimate::from_samples(totals);
}

// --- TruncatedCostProfile ---------------------------------------------------

TruncatedCostProfile::TruncatedCostProfile(SafetyBounds bounds, const NoiseModel& noise, Horizon horizon, int reps,
                                           std::uint64_t seed, int lattice_cells, double x0)
    : bounds_(bounds), horizon_(horizon), x0_(x0), bank_(noise, reps, horizon.length(), seed), cells_(lattice_cells) {
  if (lattice_cells < 0) throw std::invalid_argument("TruncatedCostProfile: negative lattice size");
  if (cells_ > 0) {
    node_once_ = std::make_unique<std::once_flag[]>(static_cast<std::size_t>(cells_) + 1);
    nodes_.resize(static_cast<std::size_t>(cells_) + 1);
  }
}

std::vector<LoopMoments> TruncatedCostProfile::simulate(double rho) const {
  std::vector<LoopMoments> out(static_cast<std::size_t>(bank_.reps()));
  const double lo = bounds_.lo;
  const double hi = bounds_.hi;
  for (int rep = 0; rep < bank_.reps(); ++rep) {
    const auto w = bank_.stream(rep);
    LoopMoments m;
    double x = x0_;
    for (std::int64_t t = 0; t < horizon_.length(); ++t) {
      const double y = std::clamp(rho * x, lo, hi);
      if (t >= horizon_.burn_in) {
        m.sxx += x * x;
        m.sxy += x * y;
        m.syy += y * y;
      }
      x = y + w[static_cast<std::size_t>(t)];
    }
    if (horizon_.terminal) m.terminal = x * x;
    out[static_cast<std::size_t>(rep)] = m;
  }
  return out;
}

const TruncatedCostProfile::Moments& TruncatedCostProfile::exact(double rho) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = exact_.find(rho); it != exact_.end()) return *it->second;
  }
  auto fresh = std::make_unique<Moments>(simulate(rho));
  std::lock_guard lock(mutex_);
  // A concurrent caller may have inserted the same (deterministic) value.
  auto [it, inserted] = exact_.try_emplace(rho, std::move(fresh));
  return *it->second;
}

const TruncatedCostProfile::Moments& TruncatedCostProfile::node(int i) const {
  const auto idx = static_cast<std::size_t>(i);
  std::call_once(node_once_[idx], [&] { nodes_[idx] = simulate(static_cast<double>(i) / cells_); });
  return nodes_[idx];
}

template <class Fn>
void TruncatedCostProfile::for_each_rep(double rho, Fn&& fn) const {
  rho = std::clamp(rho, 0.0, 1.0);
  const auto reps = static_cast<std::size_t>(bank_.reps());
  if (cells_ == 0) {
    const auto& m = exact(rho);
    for (std::size_t k = 0; k < reps; ++k) fn(m[k]);
    return;
  }
  const double pos = rho * cells_;
  const int i = std::min(static_cast<int>(std::floor(pos)), cells_);
  const double frac = pos - i;
  const auto& left = node(i);
  if (frac == 0.0) {
    for (std::size_t k = 0; k < reps; ++k) fn(left[k]);
    return;
  }
  const auto& right = node(i + 1);
  for (std::size_t k = 0; k < reps; ++k) {
    const auto& l = left[k];
    const auto& r = right[k];
    fn(LoopMoments{l.sxx + frac * (r.sxx - l.sxx), l.sxy + frac * (r.sxy - l.sxy), l.syy + frac * (r.syy - l.syy),
                   l.terminal + frac * (r.terminal - l.terminal)});
  }
}

namespace {

double total_from_moments(const LoopMoments& m, const Dynamics& theta, const CostParams& w) {
  // sum (y - a x)^2 = syy - 2a sxy + a^2 sxx; u = (y - a x)/b
  const double a = theta.a;
  const double control_sq = std::max(0.0, m.syy - 2.0 * a * m.sxy + a * a * m.sxx);
  return w.q * (m.sxx + m.terminal) + w.r * control_sq / (theta.b * theta.b);
}

}  // namespace

CostEstimate TruncatedCostProfile::cost_at_rho(const Dynamics& theta, const CostParams& weights, double rho) const {
  std::vector<double> totals;
  totals.reserve(static_cast<std::size_t>(bank_.reps()));
  for_each_rep(rho, [&](const LoopMoments& m) { totals.push_back(total_from_moments(m, theta, weights)); });
  return CostEstimate::from_samples(totals);
}

double TruncatedCostProfile::mean_cost_at_rho(const Dynamics& theta, const CostParams& weights, double rho) const {
  double sum = 0.0;
  for_each_rep(rho, [&](const LoopMoments& m) { sum += total_from_moments(m, theta, weights); });
  return sum / bank_.reps();
}

CostEstimate TruncatedCostProfile::cost(const Dynamics& theta, const CostParams& weights, double gain) const {
  return cost_at_rho(theta, weights, theta.a - theta.b * gain);
}

// --- gain search -------------------------------------------------------------

GainSearchResult k_opt_search(const Dynamics& theta, const CostParams& cost, const TruncatedCostProfile& profile,
                              double tol, int grid_points) {
  require_positive_dynamics(theta, "k_opt_search");
  if (!(tol > 0.0)) throw std::invalid_argument("k_opt_search: tol must be positive");
  if (grid_points < 3) throw std::invalid_argument("k_opt_search: need at least 3 grid points");

  const auto range = gain_interval(theta);
  // Equally spaced gains lo..hi map to rho = 1 - i/(n-1); computing rho
  // directly keeps the grid identical for every theta, so cached moments
  // are shared across searches.
  const int last = grid_points - 1;
  auto rho_of = [&](int i) { return 1.0 - static_cast<double>(i) / last; };
  auto f = [&](double rho) { return profile.mean_cost_at_rho(theta, cost, rho); };

  int best_i = 0;
  double best_val = f(rho_of(0));
  for (int i = 1; i <= last; ++i) {
    const double v = f(rho_of(i));
    if (v < best_val) {
      best_val = v;
      best_i = i;
    }
  }
  double best_rho = rho_of(best_i);

  double lo = rho_of(std::min(best_i + 1, last));
  double hi = rho_of(std::max(best_i - 1, 0));
  const double tol_rho = tol * theta.b;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  auto consider = [&](double rho, double v) {
    if (v < best_val) {
      best_val = v;
      best_rho = rho;
    }
  };
  while (hi - lo > tol_rho) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (lo + hi);
  consider(c, fc);
  consider(d, fd);
  consider(mid, f(mid));

  GainSearchResult out;
  out.gain = std::clamp((theta.a - best_rho) / theta.b, range.lo, range.hi);
  out.cost = profile.cost_at_rho(theta, cost, best_rho);
  return out;
}

GainSearchResult k_opt_search(const Dynamics& theta, const SafetyBounds& bounds, const CostParams& cost,
                              const NoiseModel& noise, std::int64_t eval_horizon, int reps, double tol,
                              std::uint64_t seed) {
  TruncatedCostProfile profile(bounds, noise, Horizon::finite(eval_horizon), reps, seed);
  return k_opt_search(theta, cost, profile, tol);
}

Horizon OracleSettings::proxy_horizon(std::int64_t run_horizon) const {
  const auto root = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(run_horizon))));
  return Horizon::stationary(std::max(min_eval_horizon, root), burn_in);
}

GainOracle::GainOracle(const SafetyBounds& bounds, const CostParams& cost, const NoiseModel& noise,
                       const OracleSettings& settings, std::int64_t run_horizon, std::uint64_t seed)
    : cost_(cost),
      settings_(settings),
      profile_(bounds, noise, settings.proxy_horizon(run_horizon), settings.reps,
               derive_seed(seed, {stream::profile}), settings.lattice_cells) {}

GainSearchResult GainOracle::search(const Dynamics& theta) const {
  return k_opt_search(theta, cost_, profile_, settings_.tol, settings_.grid_points);
}

double GainOracle::k_opt(const Dynamics& theta) const { return search(theta).gain; }

BaselineResult baseline_cost(const Dynamics& theta_true, const SafetyBounds& bounds, const CostParams& cost,
                             const NoiseModel& noise, std::int64_t horizon, int reps, std::uint64_t seed, double tol) {
  BaselineResult out;
  const auto found =
      k_opt_search(theta_true, bounds, cost, noise, horizon, reps, tol, derive_seed(seed, {stream::search}));
  out.gain = found.gain;
  out.search = found.cost;
  const TruncatedLinearController best(theta_true, found.gain, bounds);
  out.estimate = estimate_cost(
      theta_true, cost, [&best](double x) { return best(x); }, Horizon::finite(horizon), 0.0, reps,
      derive_seed(seed, {stream::evaluation}), noise);
  return out;
}

}  // namespace safelqr
