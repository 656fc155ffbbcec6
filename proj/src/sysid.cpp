// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "safelqr/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <stdexcept>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace safelqr {

GramState GramState::fresh(double ridge) {
  if (!(ridge > 0.0)) throw ConfigError("ridge must be positive");
  GramState s;
  s.v11 = ridge;
  s.v22 = ridge;
  s.ridge = ridge;
  return s;
}

GramState gram_update(GramState state, double x, double u, double x_next) {
  state.v11 += x * x;
  state.v12 += x * u;
  state.v22 += u * u;
  state.rhs1 += x * x_next;
  state.rhs2 += u * x_next;
  ++state.count;
  return state;
}

Dynamics ls_estimate(const GramState& s) {
  const double det = s.det();
  return {(s.v22 * s.rhs1 - s.v12 * s.rhs2) / det, (s.v11 * s.rhs2 - s.v12 * s.rhs1) / det};
}

double self_normalized_bound(const GramState& s, double alpha, const UncertaintyBox& prior, std::int64_t horizon) {
  if (!(alpha > 0.0)) throw ConfigError("sub-gaussian scale must be positive");
  const double t = static_cast<double>(horizon);
  const double log_det = std::log(std::max(s.det(), 1.0));
  const double inner = log_det + std::log(s.ridge * s.ridge) + 2.0 * std::log(t * t);
  const double bound = alpha * std::sqrt(std::max(inner, 0.0)) +
                       std::sqrt(s.ridge) * (prior.a_hi * prior.a_hi + prior.b_hi * prior.b_hi);
  if (!(bound > 0.0)) throw ConfigError("confidence bound B_t is not positive; check ridge and horizon");
  return bound;
}

double confidence_radius(const GramState& s, double alpha, const UncertaintyBox& prior, std::int64_t horizon) {
  return self_normalized_bound(s, alpha, prior, horizon) * std::sqrt(std::max(s.v11, s.v22) / s.det());
}

ConfidenceEstimate confidence_estimate(const GramState& s, double alpha, const UncertaintyBox& prior,
                                       std::int64_t horizon) {
  ConfidenceEstimate est;
  est.theta_hat_pre = ls_estimate(s);
  est.bound = self_normalized_bound(s, alpha, prior, horizon);
  est.eps = est.bound * std::sqrt(std::max(s.v11, s.v22) / s.det());
  return est;
}

Dynamics select_optimistic_theta(const Dynamics& theta_pre, double eps, const UncertaintyBox& prior,
                                 const GainOracle& oracle, int grid) {
  const auto box = ball_to_box(prior.clip(theta_pre), eps, prior);
  if (box.size() == 0.0) return {box.a_lo, box.b_lo};
  grid = std::max(grid, 2);
  Dynamics best{box.a_lo, box.b_lo};
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    const double a = i + 1 == grid ? box.a_hi : box.a_lo + (box.a_hi - box.a_lo) * i / (grid - 1);
    for (int j = 0; j < grid; ++j) {
      const double b = j + 1 == grid ? box.b_hi : box.b_lo + (box.b_hi - box.b_lo) * j / (grid - 1);
      const Dynamics theta{a, b};
      const double val = a - b * oracle.k_opt(theta);
      if (val > best_val) {
        best_val = val;
        best = theta;
      }
    }
  }
  return best;
}

void write_transitions_csv(std::ostream& out, std::span<const Transition> log) {
  out << "t,x,u,x_next\n";
  out << std::setprecision(17);
  for (const auto& tr : log) out << tr.t << ',' << tr.x << ',' << tr.u << ',' << tr.x_next << '\n';
}

std::vector<Transition> read_transitions_csv(std::istream& in) {
  std::vector<Transition> log;
  std::string line;
  if (!std::getline(in, line)) return log;
  if (line.rfind("t,x,u,x_next", 0) != 0) throw std::runtime_error("transition log: missing header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Transition tr;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(row >> tr.t >> c1 >> tr.x >> c2 >> tr.u >> c3 >> tr.x_next) || c1 != ',' || c2 != ',' || c3 != ',') {
      throw std::runtime_error("transition log: malformed row '" + line + "'");
    }
    log.push_back(tr);
  }
  return log;
}

GramState replay(std::span<const Transition> log, double ridge) {
  auto state = GramState::fresh(ridge);
  for (const auto& tr : log) state = gram_update(state, tr.x, tr.u, tr.x_next);
  return state;
}

}  // namespace safelqr
