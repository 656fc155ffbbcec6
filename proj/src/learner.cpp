// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "safelqr/learner.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "safelqr/analytic.hpp"

namespace safelqr {

std::string to_string(Phase phase) { return phase == Phase::warmup ? "warmup" : "epoch"; }

std::string to_string(Branch branch) {
  switch (branch) {
    case Branch::unset:
      return "unset";
    case Branch::small_noise:
      return "small_noise";
    case Branch::large_noise:
      return "large_noise";
  }
  return "unknown";
}

std::string to_string(NominalKind kind) {
  return kind == NominalKind::unconstrained_linear ? "unconstrained_linear" : "truncated_linear";
}

void IncidentCounts::add(ClampTag tag) {
  switch (tag) {
    case ClampTag::none:
      ++none;
      break;
    case ClampTag::upper:
      ++upper;
      break;
    case ClampTag::lower:
      ++lower;
      break;
    case ClampTag::infeasible:
      ++infeasible;
      break;
  }
}

std::int64_t warmup_length(std::int64_t horizon) {
  if (horizon < 1) throw std::invalid_argument("warmup_length: horizon must be positive");
  auto root = static_cast<std::int64_t>(std::sqrt(static_cast<double>(horizon)));
  while (root * root > horizon) --root;
  while (root * root < horizon) ++root;
  return root;
}

std::vector<std::pair<std::int64_t, std::int64_t>> epoch_schedule(std::int64_t horizon) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  const auto t0 = warmup_length(horizon);
  for (std::int64_t start = t0; start < horizon; start *= 2) {
    out.emplace_back(start, std::min(start, horizon - start));
  }
  return out;
}

std::optional<double> switch_quantity(const Dynamics& theta_wu, const CostParams& cost, double d_hi, double w_bar) {
  if (!std::isfinite(w_bar)) return std::nullopt;
  const double rho = theta_wu.a - theta_wu.b * f_opt(theta_wu, cost);
  if (!(rho > 0.0)) return std::nullopt;
  return w_bar + d_hi - d_hi / rho;
}

// --- SafeLqrLearner ------------------------------------------------------------

SafeLqrLearner::SafeLqrLearner(LearnerConfig config, std::shared_ptr<const GainOracle> oracle)
    : config_(std::move(config)),
      oracle_(std::move(oracle)),
      t0_(warmup_length(config_.horizon)),
      dither_scale_(1.0 / std::log(static_cast<double>(config_.horizon))),
      gram_(GramState::fresh(config_.ridge)) {
  if (!oracle_) throw std::invalid_argument("SafeLqrLearner: gain oracle required");
}

ClampResult SafeLqrLearner::warmup_control(double x, Rng& rng) {
  if (phase_ != Phase::warmup) throw std::logic_error("warmup_control called outside warm-up");
  last_dither_ = rng.rademacher();
  const double u = init_control(config_.prior, x) + last_dither_ * dither_scale_;
  const auto out = clamp_control(u, SafeClampSpec{config_.prior, config_.bounds}, x);
  incidents_.add(out.tag);
  return out;
}

void SafeLqrLearner::observe(double x, double u, double x_next) { gram_ = gram_update(gram_, x, u, x_next); }

void SafeLqrLearner::finish_warmup() {
  if (phase_ != Phase::warmup) throw std::logic_error("finish_warmup called twice");
  if (gram_.count != t0_) throw std::logic_error("finish_warmup: expected exactly T0 transitions");
  theta_wu_ = config_.prior.clip(ls_estimate(gram_));
  switch_value_ = switch_quantity(theta_wu_, config_.cost, config_.bounds.hi, config_.noise.support_bound());
  const double threshold = config_.c_switch * std::pow(static_cast<double>(config_.horizon), -0.25);
  branch_ = switch_value_ && *switch_value_ <= threshold ? Branch::small_noise : Branch::large_noise;
  small_noise_gain_ = f_opt(theta_wu_, config_.cost);
  phase_ = Phase::epoch;
}

const EpochPlan& SafeLqrLearner::epoch_setup(int s) {
  if (phase_ != Phase::epoch) throw std::logic_error("epoch_setup before warm-up finished");
  const std::int64_t start = t0_ << s;
  if (gram_.count != start) throw std::logic_error("epoch_setup: transitions absorbed do not match T_s");

  const auto conf = confidence_estimate(gram_, config_.noise.subgaussian_alpha(), config_.prior, config_.horizon);
  if (s == 0) eps0_ = conf.eps;

  EpochPlan plan;
  plan.index = s;
  plan.start = start;
  plan.length = std::min(start, config_.horizon - start);
  plan.theta_pre = config_.prior.clip(conf.theta_hat_pre);
  plan.eps = conf.eps;

  if (branch_ == Branch::small_noise) {
    // theta_hat_s plays no role in this branch; record the clipped estimate.
    plan.theta_hat = plan.theta_pre;
    plan.kind = NominalKind::unconstrained_linear;
    plan.gain = small_noise_gain_;
    plan.clamp_ball = ball_to_box(theta_wu_, eps0_, config_.prior);
  } else {
    plan.theta_hat = select_optimistic_theta(plan.theta_pre, plan.eps, config_.prior, *oracle_,
                                             config_.optimism_grid);
    plan.kind = NominalKind::truncated_linear;
    const bool reuse = !epochs_.empty() && epochs_.back().kind == NominalKind::truncated_linear &&
                       std::abs(epochs_.back().theta_hat.a - plan.theta_hat.a) < oracle_->settings().tol &&
                       std::abs(epochs_.back().theta_hat.b - plan.theta_hat.b) < oracle_->settings().tol;
    plan.gain = reuse ? epochs_.back().gain : oracle_->k_opt(plan.theta_hat);
    if (reuse) plan.theta_hat = epochs_.back().theta_hat;
    plan.clamp_ball = ball_to_box(plan.theta_hat, plan.eps, config_.prior);
  }
  install_plan(plan);
  epochs_.push_back(plan);
  return current_;
}

void SafeLqrLearner::install_plan(const EpochPlan& plan) {
  current_ = plan;
  if (plan.kind == NominalKind::truncated_linear) {
    nominal_.emplace(plan.theta_hat, plan.gain, config_.bounds);
  } else {
    nominal_.reset();
  }
  if (branch_ == Branch::unset) {
    branch_ = plan.kind == NominalKind::truncated_linear ? Branch::large_noise : Branch::small_noise;
  }
  phase_ = Phase::epoch;
}

ClampResult SafeLqrLearner::exploit_control(double x) {
  if (phase_ != Phase::epoch) throw std::logic_error("exploit_control called during warm-up");
  const double nominal = nominal_ ? (*nominal_)(x) : linear_control(current_.gain, x);
  const auto out = clamp_control(nominal, SafeClampSpec{current_.clamp_ball, config_.bounds}, x);
  incidents_.add(out.tag);
  return out;
}

// --- replication driver --------------------------------------------------------

std::shared_ptr<const GainOracle> make_gain_oracle(const ExperimentConfig& config) {
  return std::make_shared<const GainOracle>(config.bounds, config.cost, config.noise, config.oracle, config.horizon,
                                            config.seed);
}

namespace {

struct Plant {
  Dynamics theta;
  CostParams cost;
  SafetyBounds bounds;
  RolloutResult* rollout;
  AlgTrace* trace;

  // Applies u at state x with noise w; returns the next state.
  double step(std::int64_t t, double x, const ClampResult& c, double w, Phase phase, int epoch, double eps,
              const Dynamics& theta_hat, int dither) {
    const double margin = theta.a * x + theta.b * c.u;
    const double next = margin + w;
    rollout->total_cost += cost.q * x * x + cost.r * c.u * c.u;
    rollout->controls.push_back(c.u);
    rollout->safety_margins.push_back(margin);
    rollout->states.push_back(next);
    if (!bounds.admits(margin)) ++trace->violations;
    trace->steps.push_back({t, x, c.u, c.tag, phase, epoch, eps, theta_hat, margin, dither});
    return next;
  }
};

}  // namespace

RunResult run_algorithm(const ExperimentConfig& config, std::uint64_t rep, std::shared_ptr<const GainOracle> oracle) {
  config.validate();
  const auto init = validate_init_controller(config.prior, config.theta_true, config.bounds, config.noise,
                                             config.horizon);
  if (!init.ok) {
    throw ConfigError("initial controller fails its safety margin at x = " + std::to_string(*init.first_violation));
  }

  RunResult result;
  auto& roll = result.rollout;
  auto& trace = result.trace;
  const auto horizon = config.horizon;
  roll.states.reserve(static_cast<std::size_t>(horizon) + 1);
  roll.controls.reserve(static_cast<std::size_t>(horizon));
  roll.safety_margins.reserve(static_cast<std::size_t>(horizon));
  trace.steps.reserve(static_cast<std::size_t>(horizon));

  Rng plant_rng(derive_seed(config.seed, {stream::plant, rep}));
  Rng dither_rng(derive_seed(config.seed, {stream::dither, rep}));
  Plant plant{config.theta_true, config.cost, config.bounds, &roll, &trace};
  SafeLqrLearner learner(config.learner(), std::move(oracle));

  double x = 0.0;
  roll.states.push_back(x);
  std::int64_t t = 0;
  auto advance = [&](const ClampResult& c, Phase phase, int epoch, double eps, const Dynamics& theta_hat, int dither) {
    const double w = config.noise.sample(plant_rng);
    const double next = plant.step(t, x, c, w, phase, epoch, eps, theta_hat, dither);
    learner.observe(x, c.u, next);
    trace.transitions.push_back({t, x, c.u, next});
    x = next;
    ++t;
    if (!std::isfinite(x)) throw DivergedTrajectory("state diverged");
  };

  try {
    trace.warmup_length = learner.warmup_steps();
    for (std::int64_t i = 0; i < learner.warmup_steps(); ++i) {
      const auto c = learner.warmup_control(x, dither_rng);
      advance(c, Phase::warmup, -1, 0.0, config.prior.center(), learner.last_dither());
    }
    learner.finish_warmup();
    trace.branch = learner.branch();
    trace.switch_value = learner.switch_value();
    trace.theta_wu = learner.theta_wu();

    const auto schedule = epoch_schedule(horizon);
    for (std::size_t s = 0; s < schedule.size(); ++s) {
      const auto& plan = learner.epoch_setup(static_cast<int>(s));
      const auto snapshot = plan;
      for (std::int64_t i = 0; i < snapshot.length; ++i) {
        const auto c = learner.exploit_control(x);
        advance(c, Phase::epoch, snapshot.index, snapshot.eps, snapshot.theta_hat, 0);
      }
    }
    roll.total_cost += config.cost.q * x * x;
  } catch (const DivergedTrajectory&) {
    trace.diverged = true;
  }
  trace.epochs = learner.epochs();
  trace.incidents = learner.incidents();
  return result;
}

RunResult run_init_only(const ExperimentConfig& config, std::uint64_t rep) {
  config.validate();
  RunResult result;
  auto& roll = result.rollout;
  auto& trace = result.trace;
  Rng plant_rng(derive_seed(config.seed, {stream::plant, rep}));
  Plant plant{config.theta_true, config.cost, config.bounds, &roll, &trace};
  double x = 0.0;
  roll.states.push_back(x);
  for (std::int64_t t = 0; t < config.horizon; ++t) {
    const ClampResult c{init_control(config.prior, x), ClampTag::none};
    trace.incidents.add(c.tag);
    x = plant.step(t, x, c, config.noise.sample(plant_rng), Phase::warmup, -1, 0.0, config.prior.center(), 0);
  }
  roll.total_cost += config.cost.q * x * x;
  return result;
}

void write_trace_csv(std::ostream& out, const AlgTrace& trace) {
  const auto old_precision = out.precision(12);
  out << "t,x,u,tag,phase,epoch,eps_s,theta_hat_a,theta_hat_b,margin_true\n";
  for (const auto& s : trace.steps) {
    out << s.t << ',' << s.x << ',' << s.u << ',' << to_string(s.tag) << ',' << to_string(s.phase) << ',' << s.epoch
        << ',' << s.eps << ',' << s.theta_hat.a << ',' << s.theta_hat.b << ',' << s.margin_true << '\n';
  }
  out.precision(old_precision);
}

}  // namespace safelqr
