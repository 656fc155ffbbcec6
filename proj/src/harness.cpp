// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "safelqr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "safelqr/analytic.hpp"
#include "safelqr/random.hpp"
#include "safelqr/sysid.hpp"

namespace safelqr {

std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

namespace {

// Rounds to 12 significant digits so the JSON writer prints that many.
double json_real(double v) {
  if (!std::isfinite(v)) return v;
  return std::stod(format_real(v));
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

template <class Task>
void parallel_for(std::size_t n, int workers, Task&& task) {
  workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

SlopeFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need two or more paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_line: x values are all equal");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (x.size() > 2) {
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - fit.intercept - fit.slope * x[i];
      sse += e * e;
    }
    fit.slope_stderr = std::sqrt(sse / (n - 2.0) / sxx);
  }
  return fit;
}

// --- caches ------------------------------------------------------------------

const BaselineResult& BaselineCache::get(const ExperimentConfig& config) {
  Slot* slot = nullptr;
  {
    std::lock_guard lock(mutex_);
    auto& entry = slots_[config.horizon];
    if (!entry) entry = std::make_unique<Slot>();
    slot = entry.get();
  }
  std::call_once(slot->once, [&] {
    slot->value = baseline_cost(config.theta_true, config.bounds, config.cost, config.noise, config.horizon,
                                config.baseline_reps,
                                derive_seed(config.seed, {static_cast<std::uint64_t>(config.horizon)}),
                                config.oracle.tol);
  });
  return slot->value;
}

std::shared_ptr<const GainOracle> OracleCache::get(const ExperimentConfig& config) {
  const auto key = config.oracle.proxy_horizon(config.horizon).steps;
  std::lock_guard lock(mutex_);
  auto& entry = oracles_[key];
  if (!entry) entry = make_gain_oracle(config);
  return entry;
}

// --- replications and sweeps -------------------------------------------------

RegretReport run_replication(const ExperimentConfig& config, int rep, BaselineCache& baselines,
                             OracleCache& oracles) {
  const auto& baseline = baselines.get(config);
  const auto run = config.policy == PolicyKind::algorithm
                       ? run_algorithm(config, static_cast<std::uint64_t>(rep), oracles.get(config))
                       : run_init_only(config, static_cast<std::uint64_t>(rep));
  RegretReport report;
  report.horizon = config.horizon;
  report.rep = rep;
  report.alg_total_cost = run.rollout.total_cost;
  report.baseline_mean = baseline.estimate.mean;
  report.baseline_stderr = baseline.estimate.std_err;
  report.infeasible_clamps = run.trace.incidents.infeasible;
  report.branch = run.trace.branch;
  report.diverged = run.trace.diverged;
  if (report.diverged) {
    report.violations = -1;
    report.regret = std::numeric_limits<double>::infinity();
  } else {
    report.violations = run.trace.violations;
    report.regret = report.alg_total_cost - report.baseline_mean;
  }
  return report;
}

void fit_sweep(SweepResult& sweep) {
  sweep.horizons.clear();
  sweep.median_regret.clear();
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < sweep.rows.size();) {
    const auto t = sweep.rows[i].horizon;
    std::vector<double> regrets;
    for (; i < sweep.rows.size() && sweep.rows[i].horizon == t; ++i) regrets.push_back(sweep.rows[i].regret);
    const double m = median(std::move(regrets));
    sweep.horizons.push_back(t);
    sweep.median_regret.push_back(m);
    lx.push_back(std::log(static_cast<double>(t)));
    ly.push_back(std::log(std::max(m, kRegretFloor)));
  }
  if (lx.size() >= 2) {
    const auto fit = fit_line(lx, ly);
    sweep.fitted_slope = fit.slope;
    sweep.slope_stderr = fit.slope_stderr;
  }
}

SweepResult sweep_regret(const ExperimentConfig& base, std::span<const std::int64_t> horizons, int reps, int workers) {
  if (reps < 1) throw ConfigError("sweep needs at least one replication");
  std::vector<std::int64_t> ts(horizons.begin(), horizons.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<ExperimentConfig> configs;
  for (auto t : ts) {
    configs.push_back(base.with_horizon(t));
    configs.back().validate();
  }

  BaselineCache baselines;
  OracleCache oracles;
  // Baselines first, one per horizon, so the replication pool never waits on them.
  parallel_for(configs.size(), workers, [&](std::size_t i) { baselines.get(configs[i]); });

  SweepResult sweep;
  sweep.rows.resize(ts.size() * static_cast<std::size_t>(reps));
  parallel_for(sweep.rows.size(), workers, [&](std::size_t i) {
    const auto& config = configs[i / static_cast<std::size_t>(reps)];
    sweep.rows[i] = run_replication(config, static_cast<int>(i % static_cast<std::size_t>(reps)), baselines, oracles);
  });
  fit_sweep(sweep);
  return sweep;
}

// --- continuity probes -------------------------------------------------------

double ProbeTable::band() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& r : rows) {
    if (r.size <= 0.0) continue;
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
  }
  if (hi == 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

ProbeTable probe_continuity_in_theta(const Dynamics& theta_star, const SafetyBounds& bounds, const CostParams& cost,
                                     const NoiseModel& noise, std::span<const double> perturbations,
                                     const ThetaProbeSettings& settings) {
  const double scale = std::max(std::abs(settings.direction.a), std::abs(settings.direction.b));
  if (!(scale > 0.0)) throw std::invalid_argument("probe_continuity_in_theta: zero direction");
  const Dynamics dir{settings.direction.a / scale, settings.direction.b / scale};

  const auto horizon = Horizon::finite(settings.horizon);
  const TruncatedCostProfile search_profile(bounds, noise, horizon, settings.reps,
                                            derive_seed(settings.seed, {stream::probe, stream::search}));
  const NoiseBank bank(noise, settings.reps, horizon.length(),
                       derive_seed(settings.seed, {stream::probe, stream::evaluation}));

  auto per_rep_costs = [&](const Dynamics& nominal) {
    const double gain = k_opt_search(nominal, cost, search_profile, settings.tol).gain;
    const TruncatedLinearController ctrl(nominal, gain, bounds);
    std::vector<double> out(static_cast<std::size_t>(bank.reps()));
    for (int rep = 0; rep < bank.reps(); ++rep) {
      out[static_cast<std::size_t>(rep)] =
          simulate_cost(theta_star, cost, ctrl, horizon, 0.0, bank.stream(rep)) / static_cast<double>(horizon.steps);
    }
    return out;
  };

  const auto reference = per_rep_costs(theta_star);
  ProbeTable table;
  for (double eps : perturbations) {
    if (!(eps >= 0.0) || eps > 0.1) throw std::invalid_argument("probe_continuity_in_theta: need 0 <= eps <= 0.1");
    const Dynamics theta{theta_star.a + eps * dir.a, theta_star.b + eps * dir.b};
    const auto perturbed = per_rep_costs(theta);
    std::vector<double> diff(perturbed.size());
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = perturbed[k] - reference[k];
    const auto est = CostEstimate::from_samples(diff);
    ProbeRow row;
    row.size = eps;
    row.delta = std::abs(est.mean);
    row.std_err = est.std_err;
    row.ratio = eps > 0.0 ? row.delta / eps : 0.0;
    table.rows.push_back(row);
  }
  return table;
}

StateProbe probe_continuity_in_state(const Dynamics& theta, double gain, const SafetyBounds& bounds,
                                     const CostParams& cost, const NoiseModel& noise, std::span<const double> deltas,
                                     const StateProbeSettings& settings) {
  const TruncatedLinearController ctrl(theta, gain, bounds);
  const auto horizon = Horizon::finite(settings.horizon);
  const NoiseBank bank(noise, settings.reps, horizon.length(), derive_seed(settings.seed, {stream::probe}));

  std::vector<double> base(static_cast<std::size_t>(bank.reps()));
  for (int rep = 0; rep < bank.reps(); ++rep) {
    base[static_cast<std::size_t>(rep)] = simulate_cost(theta, cost, ctrl, horizon, settings.start, bank.stream(rep));
  }

  StateProbe probe;
  double largest = 0.0;
  for (double delta : deltas) {
    if (!(delta >= 0.0)) throw std::invalid_argument("probe_continuity_in_state: negative delta");
    std::vector<double> diff(base.size());
    for (int rep = 0; rep < bank.reps(); ++rep) {
      const double shifted = simulate_cost(theta, cost, ctrl, horizon, settings.start + delta, bank.stream(rep));
      diff[static_cast<std::size_t>(rep)] = std::abs(shifted - base[static_cast<std::size_t>(rep)]);
    }
    ProbeRow row;
    row.size = delta;
    row.delta = median(diff);
    row.std_err = CostEstimate::from_samples(diff).std_err;
    row.ratio = delta > 0.0 ? row.delta / delta : 0.0;
    probe.table.rows.push_back(row);
    largest = std::max(largest, delta);
  }

  if (largest > 0.0) {
    const auto w = bank.stream(0);
    double x = settings.start;
    double y = settings.start + largest;
    for (std::int64_t i = 1; i <= horizon.steps; ++i) {
      const double wi = w[static_cast<std::size_t>(i - 1)];
      x = theta.a * x + theta.b * ctrl(x) + wi;
      y = theta.a * y + theta.b * ctrl(y) + wi;
      if (std::abs(x - y) < largest) {
        probe.contraction_steps = i;
        break;
      }
    }
  }
  return probe;
}

// --- verification suite ------------------------------------------------------

namespace {

template <class F>
double golden_min(F&& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  while (hi - lo > tol) {
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
  return 0.5 * (lo + hi);
}

// Largest u with max over the box corners of a x + b u <= d_hi, by bisection.
double brute_upper(const UncertaintyBox& box, const SafetyBounds& bounds, double x, int grid) {
  auto worst = [&](double u) {
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i) {
      const double a = box.a_lo + (box.a_hi - box.a_lo) * i / (grid - 1);
      for (int j = 0; j < grid; ++j) {
        const double b = box.b_lo + (box.b_hi - box.b_lo) * j / (grid - 1);
        m = std::max(m, a * x + b * u);
      }
    }
    return m;
  };
  double lo = -1e3;
  double hi = 1e3;
  for (int k = 0; k < 80; ++k) {
    const double mid = 0.5 * (lo + hi);
    (worst(mid) <= bounds.hi ? lo : hi) = mid;
  }
  return lo;
}

CheckResult make_check(std::string name, double measured, double threshold, bool pass, std::string detail = {}) {
  return {std::move(name), pass, measured, threshold, std::move(detail)};
}

}  // namespace

std::vector<CheckResult> verify_suite(const ExperimentConfig& config, const VerifyOptions& options) {
  const auto fopt = options.f_opt_impl ? options.f_opt_impl
                                       : std::function<double(const Dynamics&, const CostParams&)>(f_opt);
  std::vector<CheckResult> checks;
  Rng rng(derive_seed(options.seed, {stream::probe, 0x7e51}));
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform01(); };

  // closed-form stationary cost against Monte Carlo
  {
    int within = 0;
    double worst_z = 0.0;
    const int pairs = 8;
    for (int i = 0; i < pairs; ++i) {
      const Dynamics theta{uniform(0.5, 1.5), uniform(0.5, 1.5)};
      const double rho = uniform(0.05, 0.95);
      const double gain = (theta.a - rho) / theta.b;
      const CostParams w{uniform(0.5, 2.0), uniform(0.5, 2.0)};
      const auto noise = NoiseModel::uniform(uniform(0.2, 1.0));
      const double exact = unconstrained_cost(theta, gain, w, noise.variance());
      // Many short replications keep the stderr estimate close to its true value.
      const std::int64_t steps = 4000;
      auto est = estimate_cost(
          theta, w, [gain](double x) { return linear_control(gain, x); }, Horizon::stationary(steps, 200), 0.0, 50,
          rng.next(), noise);
      const double z = std::abs(est.mean / steps - exact) / (est.std_err / steps);
      worst_z = std::max(worst_z, z);
      within += z <= 3.0 ? 1 : 0;
    }
    checks.push_back(make_check("closed_form_cost_vs_monte_carlo", worst_z, 3.0, within == pairs,
                                std::to_string(within) + "/" + std::to_string(pairs) + " within 3 stderr"));
  }

  // f_opt against golden-section minimization
  {
    double worst = 0.0;
    bool margins_ok = true;
    for (int i = 0; i < 200; ++i) {
      const Dynamics theta{uniform(0.2, 2.0), uniform(0.2, 2.0)};
      const CostParams w{uniform(0.1, 10.0), uniform(0.1, 10.0)};
      const auto range = gain_interval(theta);
      const double pad = 1e-9 * range.width();
      const double ref = golden_min([&](double k) { return unconstrained_cost(theta, k, w, 1.0); }, range.lo + pad,
                                    range.hi - pad, 1e-10);
      worst = std::max(worst, std::abs(fopt(theta, w) - ref));
      const double rho = theta.a - theta.b * fopt(theta, w);
      margins_ok = margins_ok && rho > 1e-12 && 1.0 - rho > 1e-12;
    }
    checks.push_back(make_check("f_opt_matches_golden_section", worst, 1e-6, worst <= 1e-6));
    checks.push_back(make_check("f_opt_gain_margins_positive", margins_ok ? 1.0 : 0.0, 1.0, margins_ok));
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    const double err = std::abs(fopt({1.0, 1.0}, {1.0, 1.0}) - golden);
    checks.push_back(make_check("f_opt_golden_ratio", err, 1e-12, err <= 1e-12));
  }

  // k_opt equals f_opt when the constraint never binds
  {
    const Dynamics theta{1.0, 1.0};
    const CostParams w{1.0, 1.0};
    const auto bounds = SafetyBounds::make(-1.0, 1.0);
    const auto noise = NoiseModel::uniform(0.5);
    const double tol = 1e-3;
    const double expected = fopt(theta, w);
    const bool applicable = expected >= k_du(theta, bounds.hi, noise.support_bound());
    const auto found = k_opt_search(theta, bounds, w, noise, 4096, 128, tol, derive_seed(options.seed, {0x31}));
    const double err = std::abs(found.gain - expected);
    checks.push_back(make_check("k_opt_equals_f_opt_when_slack", err, 2.0 * tol, applicable && err <= 2.0 * tol));
  }

  // safe clamp bounds against brute force
  {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double a0 = uniform(0.3, 1.5);
      const double b0 = uniform(0.3, 1.5);
      const double ra = uniform(0.0, 0.3);
      const double rb = uniform(0.0, 0.25);
      const UncertaintyBox box{a0 - ra, a0 + ra, b0 - rb, b0 + rb};
      const auto bounds = SafetyBounds::make(-uniform(0.2, 3.0), uniform(0.2, 3.0));
      const double x = uniform(-4.0, 4.0);
      const SafeClampSpec spec{box, bounds};
      const double up = brute_upper(box, bounds, x, 41);
      const double down = -brute_upper(box, SafetyBounds{-bounds.hi, -bounds.lo}, -x, 41);
      worst = std::max({worst, std::abs(safe_upper(spec, x) - up), std::abs(safe_lower(spec, x) - down)});
    }
    checks.push_back(make_check("safe_clamp_matches_brute_force", worst, 1e-6, worst <= 1e-6));
  }

  // confidence coverage after warm-up, and the radius decay rate
  {
    const auto learner_cfg = config.learner();
    const auto oracle = make_gain_oracle(config);
    const int reps = 100;
    int covered = 0;
    // The dither only excites the (1, 1) direction at rate 1/ln^2 T, so the
    // ridge dominates V for the first few hundred steps.
    const std::vector<std::int64_t> sizes{1024, 4096, 16384, 65536};
    std::vector<double> slopes;
    for (int rep = 0; rep < reps; ++rep) {
      Rng plant(derive_seed(options.seed, {stream::plant, 0xc0, static_cast<std::uint64_t>(rep)}));
      Rng dither(derive_seed(options.seed, {stream::dither, 0xc0, static_cast<std::uint64_t>(rep)}));
      SafeLqrLearner learner(learner_cfg, oracle);
      std::vector<double> lx;
      std::vector<double> ly;
      double x = 0.0;
      const bool track = rep < 20;
      const std::int64_t steps = track ? sizes.back() : learner.warmup_steps();
      for (std::int64_t t = 1; t <= steps; ++t) {
        const double u = learner.warmup_control(x, dither).u;
        const double next = config.theta_true.a * x + config.theta_true.b * u + config.noise.sample(plant);
        learner.observe(x, u, next);
        x = next;
        if (t == learner.warmup_steps()) {
          const auto est = confidence_estimate(learner.gram(), config.noise.subgaussian_alpha(), config.prior,
                                               config.horizon);
          const double gap = std::max(std::abs(est.theta_hat_pre.a - config.theta_true.a),
                                      std::abs(est.theta_hat_pre.b - config.theta_true.b));
          covered += gap <= est.eps ? 1 : 0;
        }
        if (track && std::find(sizes.begin(), sizes.end(), t) != sizes.end()) {
          lx.push_back(std::log(static_cast<double>(t)));
          ly.push_back(std::log(
              confidence_radius(learner.gram(), config.noise.subgaussian_alpha(), config.prior, config.horizon)));
        }
      }
      if (track) slopes.push_back(fit_line(lx, ly).slope);
    }
    const double coverage = static_cast<double>(covered) / reps;
    checks.push_back(make_check("confidence_coverage_after_warmup", coverage, 0.95, coverage >= 0.95));
    const double slope = median(slopes);
    checks.push_back(make_check("confidence_radius_slope", slope, -0.5, std::abs(slope + 0.5) <= 0.1,
                                "accepted band -0.5 +/- 0.1"));
  }

  // continuity probes
  {
    const Dynamics theta{1.0, 1.0};
    const auto bounds = SafetyBounds::make(-0.6, 0.6);
    const auto noise = NoiseModel::uniform(1.0);
    const std::vector<double> eps{0.0, 0.08, 0.04, 0.02, 0.01};
    ThetaProbeSettings ts;
    ts.reps = 32;
    ts.seed = options.seed;
    // Truncation must bind often; with slack bounds the gap is second order in eps.
    const auto theta_table =
        probe_continuity_in_theta(theta, SafetyBounds::make(-0.3, 0.3), config.cost, noise, eps, ts);
    const double band = theta_table.band();
    checks.push_back(make_check("continuity_in_theta_band", band, 4.0,
                                band <= 4.0 && theta_table.rows.front().delta == 0.0));

    const std::vector<double> deltas{0.0, 0.04, 0.02, 0.01};
    StateProbeSettings ss;
    ss.reps = 32;
    ss.seed = options.seed;
    const auto state = probe_continuity_in_state(theta, 0.5, bounds, config.cost, noise, deltas, ss);
    const double sband = state.table.band();
    checks.push_back(make_check("continuity_in_state_band", sband, 4.0,
                                sband <= 4.0 && state.table.rows.front().delta == 0.0));
    checks.push_back(make_check("state_gap_contracts", static_cast<double>(state.contraction_steps), 200.0,
                                state.contraction_steps > 0 && state.contraction_steps <= 200));
  }

  // epoch schedule covers [T0, T) exactly
  {
    const auto schedule = epoch_schedule(config.horizon);
    std::int64_t covered = warmup_length(config.horizon);
    bool contiguous = true;
    for (std::size_t s = 0; s < schedule.size(); ++s) {
      contiguous = contiguous && schedule[s].first == covered;
      contiguous = contiguous && (s + 1 == schedule.size() || schedule[s].second == warmup_length(config.horizon) << s);
      covered += schedule[s].second;
    }
    const bool ok = contiguous && covered == config.horizon;
    checks.push_back(make_check("epoch_schedule_partitions_horizon", static_cast<double>(covered),
                                static_cast<double>(config.horizon), ok));
  }

  // every emitted control is safe for the whole clamp ball, and for theta*
  {
    const auto oracle = make_gain_oracle(config);
    std::int64_t bad = 0;
    std::int64_t violations = 0;
    for (int rep = 0; rep < 4; ++rep) {
      const auto run = run_algorithm(config, static_cast<std::uint64_t>(rep) + 1000, oracle);
      violations += run.trace.violations;
      const auto& epochs = run.trace.epochs;
      for (const auto& s : run.trace.steps) {
        if (s.tag == ClampTag::infeasible) continue;
        const auto ball = s.phase == Phase::warmup ? config.prior
                                                   : epochs[static_cast<std::size_t>(s.epoch)].clamp_ball;
        const double hi = std::max({ball.a_lo * s.x + ball.b_lo * s.u, ball.a_lo * s.x + ball.b_hi * s.u,
                                    ball.a_hi * s.x + ball.b_lo * s.u, ball.a_hi * s.x + ball.b_hi * s.u});
        const double lo = std::min({ball.a_lo * s.x + ball.b_lo * s.u, ball.a_lo * s.x + ball.b_hi * s.u,
                                    ball.a_hi * s.x + ball.b_lo * s.u, ball.a_hi * s.x + ball.b_hi * s.u});
        if (hi > config.bounds.hi + 1e-9 || lo < config.bounds.lo - 1e-9) ++bad;
      }
    }
    checks.push_back(make_check("controls_safe_for_clamp_ball", static_cast<double>(bad), 0.0, bad == 0));
    checks.push_back(make_check("true_margin_violations", static_cast<double>(violations), 0.0, violations == 0));
  }
  return checks;
}

bool all_passed(std::span<const CheckResult> checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

// --- output ------------------------------------------------------------------

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "T,rep,regret,violations,branch\n";
  for (const auto& r : sweep.rows) {
    out << r.horizon << ',' << r.rep << ',' << format_real(r.regret) << ',' << r.violations << ','
        << to_string(r.branch) << '\n';
  }
}

void write_sweep_summary_json(std::ostream& out, const SweepResult& sweep) {
  nlohmann::json j;
  j["fitted_slope"] = json_real(sweep.fitted_slope);
  j["slope_stderr"] = json_real(sweep.slope_stderr);
  j["regret_floor"] = kRegretFloor;
  auto& per = j["horizons"] = nlohmann::json::array();
  for (std::size_t i = 0; i < sweep.horizons.size(); ++i) {
    std::int64_t small = 0;
    std::int64_t clean = 0;
    std::int64_t reps = 0;
    for (const auto& r : sweep.rows) {
      if (r.horizon != sweep.horizons[i]) continue;
      ++reps;
      small += r.branch == Branch::small_noise ? 1 : 0;
      clean += r.violations == 0 ? 1 : 0;
    }
    per.push_back({{"T", sweep.horizons[i]},
                   {"reps", reps},
                   {"median_regret", json_real(sweep.median_regret[i])},
                   {"small_noise_runs", small},
                   {"violation_free_runs", clean}});
  }
  out << j.dump(2) << '\n';
}

void write_report_json(std::ostream& out, const RegretReport& r) {
  nlohmann::json j{{"T", r.horizon},
                   {"rep", r.rep},
                   {"alg_total_cost", json_real(r.alg_total_cost)},
                   {"baseline_mean", json_real(r.baseline_mean)},
                   {"baseline_stderr", json_real(r.baseline_stderr)},
                   {"regret", r.diverged ? nlohmann::json(nullptr) : nlohmann::json(json_real(r.regret))},
                   {"violations", r.violations},
                   {"infeasible_clamps", r.infeasible_clamps},
                   {"branch", to_string(r.branch)},
                   {"diverged", r.diverged}};
  out << j.dump(2) << '\n';
}

void write_baseline_json(std::ostream& out, const BaselineResult& b) {
  nlohmann::json j{{"k_opt", json_real(b.gain)},
                   {"search", {{"mean", json_real(b.search.mean)}, {"stderr", json_real(b.search.std_err)},
                               {"reps", b.search.reps}}},
                   {"estimate", {{"mean", json_real(b.estimate.mean)}, {"stderr", json_real(b.estimate.std_err)},
                                 {"reps", b.estimate.reps}}}};
  out << j.dump(2) << '\n';
}

void write_checks_table(std::ostream& out, std::span<const CheckResult> checks) {
  out << "check,result,measured,threshold,detail\n";
  for (const auto& c : checks) {
    out << c.name << ',' << (c.pass ? "PASS" : "FAIL") << ',' << format_real(c.measured) << ','
        << format_real(c.threshold) << ',' << c.detail << '\n';
  }
}

}  // namespace safelqr
