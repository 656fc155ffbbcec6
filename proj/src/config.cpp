// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "safelqr/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "safelqr/control.hpp"

namespace safelqr {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  return out;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) throw ConfigError("config key '" + key + "': not an integer");
  return static_cast<std::int64_t>(d);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || v[0] == '-') throw ConfigError("config key '" + key + "': not a u64");
  return out;
}

std::vector<std::int64_t> to_int_list(const std::string& key, const std::string& v) {
  std::vector<std::int64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_int(key, item));
  }
  return out;
}

}  // namespace

std::string to_string(PolicyKind kind) { return kind == PolicyKind::algorithm ? "algorithm" : "init_only"; }

LearnerConfig ExperimentConfig::learner() const {
  LearnerConfig lc;
  lc.horizon = horizon;
  lc.prior = prior;
  lc.cost = cost;
  lc.bounds = bounds;
  lc.noise = noise;
  lc.ridge = ridge;
  lc.c_switch = c_switch_value();
  lc.optimism_grid = optimism_grid;
  return lc;
}

ExperimentConfig ExperimentConfig::with_horizon(std::int64_t t) const {
  auto copy = *this;
  copy.horizon = t;
  return copy;
}

void ExperimentConfig::validate() const {
  if (horizon < 100) throw ConfigError("horizon must be at least 100");
  require_positive_dynamics(theta_true, "theta");
  UncertaintyBox::prior(prior.a_lo, prior.a_hi, prior.b_lo, prior.b_hi);
  if (!prior.contains(theta_true)) throw ConfigError("true dynamics must lie inside the prior box");
  CostParams::make(cost.q, cost.r);
  SafetyBounds::make(bounds.lo, bounds.hi, horizon);
  if (!(ridge > 0.0)) throw ConfigError("ridge must be positive");
  if (!(c_switch_value() > 0.0)) throw ConfigError("c_switch must be positive");
  if (replications < 1) throw ConfigError("replications must be positive");
  if (oracle.reps < 2 || oracle.grid_points < 3 || !(oracle.tol > 0.0) || oracle.lattice_cells < 0 ||
      oracle.min_eval_horizon < 1 || oracle.burn_in < 0) {
    throw ConfigError("invalid oracle settings");
  }
  if (optimism_grid < 2) throw ConfigError("optimism.grid must be at least 2");
  if (baseline_reps < 2) throw ConfigError("baseline.reps must be at least 2");
  for (auto t : sweep_horizons) {
    if (t < 100) throw ConfigError("sweep.horizons entries must be at least 100");
    SafetyBounds::make(bounds.lo, bounds.hi, t);
  }
}

ExperimentConfig parse_config(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  ExperimentConfig c;
  std::string noise_kind = "uniform";
  double noise_param = 1.0;
  double noise_cut = 0.0;
  for (const auto& [k, v] : kv) {
    if (k == "horizon") c.horizon = to_int(k, v);
    else if (k == "theta.a") c.theta_true.a = to_double(k, v);
    else if (k == "theta.b") c.theta_true.b = to_double(k, v);
    else if (k == "prior.a_lo") c.prior.a_lo = to_double(k, v);
    else if (k == "prior.a_hi") c.prior.a_hi = to_double(k, v);
    else if (k == "prior.b_lo") c.prior.b_lo = to_double(k, v);
    else if (k == "prior.b_hi") c.prior.b_hi = to_double(k, v);
    else if (k == "cost.q") c.cost.q = to_double(k, v);
    else if (k == "cost.r") c.cost.r = to_double(k, v);
    else if (k == "bounds.lo") c.bounds.lo = to_double(k, v);
    else if (k == "bounds.hi") c.bounds.hi = to_double(k, v);
    else if (k == "noise.kind") noise_kind = v;
    else if (k == "noise.param") noise_param = to_double(k, v);
    else if (k == "noise.cut") noise_cut = to_double(k, v);
    else if (k == "ridge") c.ridge = to_double(k, v);
    else if (k == "c_switch") c.c_switch = to_double(k, v);
    else if (k == "seed") c.seed = to_u64(k, v);
    else if (k == "replications") c.replications = static_cast<int>(to_int(k, v));
    else if (k == "oracle.eval_horizon") c.oracle.min_eval_horizon = to_int(k, v);
    else if (k == "oracle.burn_in") c.oracle.burn_in = to_int(k, v);
    else if (k == "oracle.reps") c.oracle.reps = static_cast<int>(to_int(k, v));
    else if (k == "oracle.tol") c.oracle.tol = to_double(k, v);
    else if (k == "oracle.grid") c.oracle.grid_points = static_cast<int>(to_int(k, v));
    else if (k == "oracle.lattice") c.oracle.lattice_cells = static_cast<int>(to_int(k, v));
    else if (k == "optimism.grid") c.optimism_grid = static_cast<int>(to_int(k, v));
    else if (k == "baseline.reps") c.baseline_reps = static_cast<int>(to_int(k, v));
    else if (k == "policy") {
      if (v == "algorithm") c.policy = PolicyKind::algorithm;
      else if (v == "init_only") c.policy = PolicyKind::init_only;
      else throw ConfigError("unknown policy '" + v + "'");
    } else if (k == "sweep.horizons") c.sweep_horizons = to_int_list(k, v);
    else throw ConfigError("unknown config key '" + k + "'");
  }
  switch (parse_noise_kind(noise_kind)) {
    case NoiseKind::uniform:
      c.noise = NoiseModel::uniform(noise_param);
      break;
    case NoiseKind::gaussian:
      c.noise = NoiseModel::gaussian(noise_param);
      break;
    case NoiseKind::truncated_gaussian:
      c.noise = NoiseModel::truncated_gaussian(noise_param, noise_cut);
      break;
  }
  c.validate();
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
  const auto old_precision = out.precision(17);
  out << "horizon = " << c.horizon << '\n'
      << "theta.a = " << c.theta_true.a << '\n'
      << "theta.b = " << c.theta_true.b << '\n'
      << "prior.a_lo = " << c.prior.a_lo << '\n'
      << "prior.a_hi = " << c.prior.a_hi << '\n'
      << "prior.b_lo = " << c.prior.b_lo << '\n'
      << "prior.b_hi = " << c.prior.b_hi << '\n'
      << "cost.q = " << c.cost.q << '\n'
      << "cost.r = " << c.cost.r << '\n'
      << "bounds.lo = " << c.bounds.lo << '\n'
      << "bounds.hi = " << c.bounds.hi << '\n'
      << "noise.kind = " << to_string(c.noise.kind()) << '\n'
      << "noise.param = " << c.noise.param() << '\n';
  if (c.noise.kind() == NoiseKind::truncated_gaussian) out << "noise.cut = " << c.noise.cut() << '\n';
  out << "ridge = " << c.ridge << '\n';
  if (c.c_switch) out << "c_switch = " << *c.c_switch << '\n';
  out << "seed = " << c.seed << '\n'
      << "replications = " << c.replications << '\n'
      << "oracle.eval_horizon = " << c.oracle.min_eval_horizon << '\n'
      << "oracle.burn_in = " << c.oracle.burn_in << '\n'
      << "oracle.reps = " << c.oracle.reps << '\n'
      << "oracle.tol = " << c.oracle.tol << '\n'
      << "oracle.grid = " << c.oracle.grid_points << '\n'
      << "oracle.lattice = " << c.oracle.lattice_cells << '\n'
      << "optimism.grid = " << c.optimism_grid << '\n'
      << "baseline.reps = " << c.baseline_reps << '\n'
      << "policy = " << to_string(c.policy) << '\n';
  if (!c.sweep_horizons.empty()) {
    out << "sweep.horizons = ";
    for (std::size_t i = 0; i < c.sweep_horizons.size(); ++i) out << (i ? "," : "") << c.sweep_horizons[i];
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace safelqr
