// Copyright 2026 The safelqr Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "safelqr/analytic.hpp"
#include "safelqr/control.hpp"
#include "safelqr/random.hpp"
#include "safelqr/sysid.hpp"

using namespace safelqr;

namespace {

double reference_bound(double alpha, double det, double ridge, double horizon, double a_hi, double b_hi) {
  const double t = horizon;
  return alpha * std::sqrt(std::log(std::max(det, 1.0)) + std::log(ridge * ridge) + 2.0 * std::log(t * t)) +
         std::sqrt(ridge) * (a_hi * a_hi + b_hi * b_hi);
}

}  // namespace

TEST_CASE("gram_update") {
  auto g = gram_update(GramState::fresh(1.0), 1.0, 2.0, 3.0);
  CHECK(g.v11 == 2.0);
  CHECK(g.v12 == 2.0);
  CHECK(g.v22 == 5.0);
  CHECK(g.rhs1 == 3.0);
  CHECK(g.rhs2 == 6.0);
  CHECK(g.count == 1);

  const auto z = gram_update(g, 0.0, 0.0, 4.0);
  CHECK(z.v11 == g.v11);
  CHECK(z.v12 == g.v12);
  CHECK(z.v22 == g.v22);
  CHECK(z.count == 2);

  const auto ab = gram_update(gram_update(GramState::fresh(1.0), 0.5, -1.0, 2.0), 3.0, 1.5, -1.0);
  const auto ba = gram_update(gram_update(GramState::fresh(1.0), 3.0, 1.5, -1.0), 0.5, -1.0, 2.0);
  CHECK(ab.v11 == ba.v11);
  CHECK(ab.v12 == ba.v12);
  CHECK(ab.v22 == ba.v22);
  CHECK_THROWS_AS(GramState::fresh(0.0), ConfigError);
}

TEST_CASE("ls_estimate") {
  CHECK(ls_estimate(GramState::fresh(1.0)) == Dynamics{0.0, 0.0});

  const auto one = gram_update(GramState::fresh(1.0), 1.0, 0.0, 1.0);
  CHECK(one.v11 == 2.0);
  CHECK(one.v22 == 1.0);
  CHECK(ls_estimate(one).a == doctest::Approx(0.5));
  CHECK(ls_estimate(one).b == doctest::Approx(0.0));

  auto g = GramState::fresh(1e-8);
  for (auto [x, u] : {std::pair{1.0, 0.0}, std::pair{0.0, 1.0}, std::pair{2.0, -1.0}}) g = gram_update(g, x, u, x + u);
  CHECK(ls_estimate(g).a == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(ls_estimate(g).b == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("least squares converges on excited data") {
  const Dynamics truth{1.0, 1.0};
  const auto noise = NoiseModel::uniform(1.0);
  Rng rng(8);
  auto g = GramState::fresh(1.0);
  double x = 0.0;
  for (int n = 1; n <= 10000; ++n) {
    const double u = -0.5 * x + (rng.uniform01() - 0.5);
    const double next = truth.a * x + truth.b * u + noise.sample(rng);
    g = gram_update(g, x, u, next);
    x = next;
    if (n == 100 || n == 1000 || n == 10000) {
      const auto est = ls_estimate(g);
      REQUIRE(std::max(std::abs(est.a - 1.0), std::abs(est.b - 1.0)) <= 5.0 / std::sqrt(n));
    }
  }
}

TEST_CASE("confidence radius formula") {
  const UncertaintyBox prior{0.9, 1.1, 0.9, 1.1};
  const auto fresh = GramState::fresh(1.0);
  const double b0 = std::sqrt(2.0 * std::log(1e8)) + 2.42;
  CHECK(self_normalized_bound(fresh, 1.0, prior, 10000) == doctest::Approx(b0).epsilon(1e-12));
  CHECK(confidence_radius(fresh, 1.0, prior, 10000) == doctest::Approx(b0).epsilon(1e-12));

  const double a1 = self_normalized_bound(fresh, 1.0, prior, 10000) - 2.42;
  const double a2 = self_normalized_bound(fresh, 2.0, prior, 10000) - 2.42;
  CHECK(a2 == doctest::Approx(2.0 * a1));

  auto g = fresh;
  Rng rng(3);
  for (int i = 0; i < 50; ++i) g = gram_update(g, rng.uniform01(), rng.uniform01() - 0.5, rng.uniform01());
  const double ref = reference_bound(1.0, g.det(), 1.0, 10000, 1.1, 1.1);
  CHECK(self_normalized_bound(g, 1.0, prior, 10000) == doctest::Approx(ref).epsilon(1e-12));
  CHECK(confidence_radius(g, 1.0, prior, 10000) ==
        doctest::Approx(ref * std::sqrt(std::max(g.v11, g.v22) / g.det())).epsilon(1e-12));
  CHECK_THROWS_AS(self_normalized_bound(g, 0.0, prior, 10000), ConfigError);
}

TEST_CASE("confidence radius shrinks only with excitation in both coordinates") {
  const UncertaintyBox prior{0.9, 1.1, 0.9, 1.1};
  // z = (1, 0) alone: max(V11, V22)/det V stays 1/ridge, so the radius cannot shrink.
  auto flat = GramState::fresh(1.0);
  double prev = confidence_radius(flat, 1.0, prior, 10000);
  for (int i = 0; i < 1000; ++i) {
    flat = gram_update(flat, 1.0, 0.0, 0.0);
    const double eps = confidence_radius(flat, 1.0, prior, 10000);
    REQUIRE(eps >= prev);
    prev = eps;
  }

  // Alternating (1, 0) and (0, 1): slope -0.5 in log-log.
  auto g = GramState::fresh(1.0);
  std::vector<double> lx, ly;
  for (int n = 1; n <= 100000; ++n) {
    g = n % 2 ? gram_update(g, 1.0, 0.0, 0.0) : gram_update(g, 0.0, 1.0, 0.0);
    if (n == 100 || n == 1000 || n == 10000 || n == 100000) {
      lx.push_back(std::log(n));
      ly.push_back(std::log(confidence_radius(g, 1.0, prior, 10000)));
    }
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / lx.size(), my += ly[i] / ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  CHECK(sxy / sxx == doctest::Approx(-0.5).epsilon(0.1));
}

TEST_CASE("radius decreases after an excited batch") {
  const UncertaintyBox prior{0.9, 1.1, 0.9, 1.1};
  Rng rng(12);
  auto g = GramState::fresh(1.0);
  for (int batch = 0; batch < 10; ++batch) {
    const double before = confidence_radius(g, 1.0, prior, 10000);
    for (int i = 0; i < 200; ++i) g = gram_update(g, rng.uniform01() - 0.5, rng.uniform01() - 0.5, 0.0);
    REQUIRE(confidence_radius(g, 1.0, prior, 10000) < before);
  }
}

TEST_CASE("warm-up data covers the truth") {
  const UncertaintyBox prior{0.9, 1.1, 0.9, 1.1};
  const Dynamics truth{1.0, 1.0};
  const auto noise = NoiseModel::uniform(1.0);
  const std::int64_t horizon = 4096;
  const int t0 = 64;
  int covered = 0;
  for (int rep = 0; rep < 200; ++rep) {
    Rng rng(derive_seed(77, {static_cast<std::uint64_t>(rep)}));
    auto g = GramState::fresh(1.0);
    double x = 0.0;
    for (int t = 0; t < t0; ++t) {
      const double u = init_control(prior, x) + rng.rademacher() / std::log(static_cast<double>(horizon));
      const double next = truth.a * x + truth.b * u + noise.sample(rng);
      g = gram_update(g, x, u, next);
      x = next;
    }
    const auto est = confidence_estimate(g, noise.subgaussian_alpha(), prior, horizon);
    covered += std::max(std::abs(est.theta_hat_pre.a - 1.0), std::abs(est.theta_hat_pre.b - 1.0)) <= est.eps;
  }
  CHECK(covered >= 190);
}

TEST_CASE("optimistic selection") {
  const UncertaintyBox prior{0.8, 1.2, 0.8, 1.2};
  OracleSettings s;
  s.reps = 32;
  s.min_eval_horizon = 2048;
  s.lattice_cells = 1024;
  const GainOracle oracle({-1e6, 1e6}, {1.0, 1.0}, NoiseModel::uniform(1.0), s, 4096, 2);

  CHECK(select_optimistic_theta({1.0, 1.05}, 0.0, prior, oracle) == Dynamics{1.0, 1.05});
  CHECK(select_optimistic_theta({1.5, 1.05}, 0.0, prior, oracle) == Dynamics{1.2, 1.05});

  Rng rng(5);
  for (int i = 0; i < 5; ++i) {
    const Dynamics center{0.85 + 0.3 * rng.uniform01(), 0.85 + 0.3 * rng.uniform01()};
    const double eps = 0.02 + 0.1 * rng.uniform01();
    const auto pick = select_optimistic_theta(center, eps, prior, oracle);
    const auto box = ball_to_box(center, eps, prior);
    REQUIRE(box_contains(box, pick));
    auto score = [&](const Dynamics& th) { return th.a - th.b * f_opt(th, {1.0, 1.0}); };
    double dense = -1e300;
    for (int a = 0; a < 50; ++a)
      for (int b = 0; b < 50; ++b)
        dense = std::max(dense, score({box.a_lo + (box.a_hi - box.a_lo) * a / 49.0,
                                       box.b_lo + (box.b_hi - box.b_lo) * b / 49.0}));
    REQUIRE(score(pick) >= dense - 2.0 * s.tol * 1.2);
    REQUIRE(pick.a - pick.b * oracle.k_opt(pick) >= center.a - center.b * oracle.k_opt(center) - s.tol);
  }

  // A ball outside the prior is clipped back in.
  const auto outside = select_optimistic_theta({2.0, 2.0}, 0.05, prior, oracle);
  CHECK(prior.contains(outside));
}

TEST_CASE("transition log round trip") {
  std::vector<Transition> log;
  Rng rng(2);
  for (int t = 0; t < 50; ++t) log.push_back({t, rng.uniform01() - 0.5, rng.uniform01() * 1e-7, rng.uniform01() * 1e9});
  std::stringstream ss;
  write_transitions_csv(ss, log);
  const auto back = read_transitions_csv(ss);
  REQUIRE(back.size() == log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    REQUIRE(back[i].x == log[i].x);
    REQUIRE(back[i].u == log[i].u);
    REQUIRE(back[i].x_next == log[i].x_next);
  }
  auto direct = GramState::fresh(0.5);
  for (const auto& tr : log) direct = gram_update(direct, tr.x, tr.u, tr.x_next);
  const auto replayed = replay(back, 0.5);
  CHECK(ls_estimate(replayed) == ls_estimate(direct));

  std::istringstream bad("t,x,u,x_next\n1,2,oops\n");
  CHECK_THROWS(read_transitions_csv(bad));
}
