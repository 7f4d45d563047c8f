// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <boost/math/distributions/poisson.hpp>

#include "spherelab/errors.hpp"
#include "spherelab/estimators.hpp"
#include "spherelab/kac.hpp"
#include "spherelab/state.hpp"
#include "spherelab/summary.hpp"

using namespace spherelab;

TEST_CASE("rotate_pair") {
  SUBCASE("identity at zero angle") {
    StateVector v(std::vector<double>{1.0, 2.0, 3.0});
    const StateVector out = rotate_pair(v, 0, 2, 0.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(out[i] == v[i]);
  }
  SUBCASE("quarter turn moves (1,0) to (0,-1)") {
    StateVector v(std::vector<double>{1.0, 0.0, 0.5});
    const StateVector out = rotate_pair(v, 0, 1, M_PI / 2.0);
    CHECK(out[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(out[2] == 0.5);
  }
  SUBCASE("plane norm is invariant") {
    NoiseStream rng(301, 0);
    StateVector v = sample_uniform_sphere(8, rng);
    for (int k = 0; k < 30; ++k) {
      const double theta = rng.gaussian(Family::jump_angle, 0, k);
      const StateVector out = rotate_pair(v, 2, 5, theta);
      CHECK(out[2] * out[2] + out[5] * out[5] ==
            doctest::Approx(v[2] * v[2] + v[5] * v[5]).epsilon(1e-14));
      v = out;
    }
  }
  SUBCASE("invalid pairs") {
    StateVector v(std::vector<double>{1.0, 0.0});
    CHECK_THROWS_AS(rotate_pair(v, 1, 1, 0.3), Error);
    CHECK_THROWS_AS(rotate_pair(v, 0, 2, 0.3), Error);
  }
}

TEST_CASE("jump config rates") {
  JumpConfig config;
  config.dimension = 10;
  config.epsilon = 0.5;
  CHECK(config.pair_rate() == doctest::Approx(4.0));
  CHECK(config.aggregate_rate() == doctest::Approx(4.0 * 45.0));
  config.clock = ClockConvention::tau_n;
  CHECK(config.aggregate_rate() == doctest::Approx(9.0));
}

TEST_CASE("zero horizon produces no events") {
  JumpConfig config;
  config.dimension = 4;
  config.horizon = 0.0;
  NoiseStream rng(302, 0);
  const StateVector init = sample_uniform_sphere(4, rng);
  const JumpTrajectory traj = simulate_kac(config, init, rng);
  CHECK(traj.events().empty());
  for (std::size_t i = 0; i < 4; ++i) CHECK(traj.terminal()[i] == init[i]);
}

TEST_CASE("event count is Poisson with rate lambda_eps * pairs") {
  // D = 2, eps = 0.5, T = 4: a single pair with rate 4 gives Poisson(16).
  JumpConfig config;
  config.dimension = 2;
  config.epsilon = 0.5;
  config.horizon = 4.0;
  config.seed = 303;
  StateVector init(std::vector<double>{1.0, 1.0});
  const std::size_t m = 400;
  Accumulator acc;
  boost::math::poisson_distribution<double> pois(16.0);
  const double lo = boost::math::quantile(pois, 0.005);
  const double hi = boost::math::quantile(pois, 0.995);
  std::size_t inside = 0;
  for (std::size_t traj = 0; traj < m; ++traj) {
    NoiseStream rng(config.seed, traj);
    const JumpTrajectory jt = simulate_kac(config, init, rng);
    const double count = static_cast<double>(jt.events().size());
    acc.add(count);
    if (count >= lo && count <= hi) ++inside;
  }
  CHECK(std::abs(acc.mean - 16.0) < 3.0 * acc.se());
  // 99% central interval holds for essentially all of a 400-run sample.
  CHECK(inside >= static_cast<std::size_t>(0.97 * m));
}

TEST_CASE("tau-n clock produces about (N-1) events per unit time") {
  JumpConfig config;
  config.dimension = 6;
  config.clock = ClockConvention::tau_n;
  config.horizon = 10.0;
  config.seed = 304;
  NoiseStream rng0(99, 0);
  const StateVector init = sample_uniform_sphere(6, rng0);
  Accumulator acc;
  for (std::size_t traj = 0; traj < 300; ++traj) {
    NoiseStream rng(config.seed, traj);
    acc.add(static_cast<double>(simulate_kac(config, init, rng).events().size()));
  }
  CHECK(std::abs(acc.mean - 50.0) < 3.0 * acc.se());
}

TEST_CASE("energy is conserved at every event") {
  JumpConfig config;
  config.dimension = 12;
  config.epsilon = 0.25;
  config.horizon = 0.5;
  config.seed = 305;
  NoiseStream rng(config.seed, 0);
  const StateVector init = sample_uniform_sphere(12, rng);
  const JumpTrajectory traj = simulate_kac(config, init, rng);
  CHECK(traj.events().size() > 100);
  auto cursor = traj.cursor();
  for (const auto& e : traj.events()) {
    const StateVector& s = cursor.advance_to(e.time);
    CHECK(std::abs(s.norm_sq() - 12.0) < 1e-12 * 12.0);
  }
}

TEST_CASE("piecewise-constant state accessor") {
  JumpConfig config;
  config.dimension = 3;
  config.epsilon = 0.5;
  config.horizon = 2.0;
  config.seed = 306;
  StateVector init(std::vector<double>{1.0, 1.0, 1.0});
  NoiseStream rng(config.seed, 0);
  const JumpTrajectory traj = simulate_kac(config, init, rng);
  REQUIRE(traj.events().size() >= 2);
  const auto& events = traj.events();
  // Before the first event the state is the initial one.
  const StateVector before = traj.state_at(events[0].time * 0.5);
  for (std::size_t i = 0; i < 3; ++i) CHECK(before[i] == init[i]);
  // Right-continuity: at the event time the jump has happened.
  const StateVector at0 = traj.state_at(events[0].time);
  const StateVector manual =
      rotate_pair(init, events[0].i, events[0].j, events[0].theta);
  for (std::size_t i = 0; i < 3; ++i) CHECK(at0[i] == manual[i]);
  // Terminal state equals the accessor at the horizon.
  const StateVector end = traj.state_at(config.horizon);
  for (std::size_t i = 0; i < 3; ++i) CHECK(end[i] == traj.terminal()[i]);
}

TEST_CASE("per-pair counts pass the chi-square test at D = 6") {
  JumpConfig config;
  config.dimension = 6;
  config.epsilon = 0.5;
  config.horizon = 1.0;
  config.seed = 307;
  NoiseStream rng0(100, 0);
  const StateVector init = sample_uniform_sphere(6, rng0);
  const std::size_t m = 2000;
  const std::size_t pairs = pair_count(6);
  std::vector<std::uint64_t> counts;
  counts.reserve(m * pairs);
  Accumulator angle;
  for (std::size_t traj = 0; traj < m; ++traj) {
    NoiseStream rng(config.seed, traj);
    const JumpTrajectory jt = simulate_kac(config, init, rng);
    for (std::uint64_t c : jt.pair_counts()) counts.push_back(c);
    for (const auto& e : jt.events()) angle.add(e.theta);
  }
  const ChiSquareResult chi = chi_square_poisson(counts, 4.0);
  CHECK(chi.p_value > 0.01);
  // Even angle law: empirical mean within 3 SE of zero.
  CHECK(std::abs(angle.mean) < 3.0 * angle.se());
}

TEST_CASE("event budget truncates with partial results") {
  JumpConfig config;
  config.dimension = 10;
  config.epsilon = 0.125;
  config.horizon = 10.0;
  config.event_budget = 50;
  config.seed = 308;
  NoiseStream rng(config.seed, 0);
  const StateVector init = sample_uniform_sphere(10, rng);
  const JumpTrajectory traj = simulate_kac(config, init, rng);
  CHECK(traj.truncated());
  CHECK(traj.events().size() == 50);
}

TEST_CASE("diffusion clock ratio bookkeeping") {
  // lambda_eps * Var(theta) = pi^2/3 for every epsilon (uniform law), so the
  // ratio to the diffusion's per-pair rate 1/R^2 is pi^2 R^2 / 3.
  const double expected = M_PI * M_PI * 10.0 / 3.0;
  CHECK(diffusion_clock_ratio(0.5, 10.0) ==
        doctest::Approx(expected).epsilon(1e-14));
  CHECK(diffusion_clock_ratio(0.125, 10.0) ==
        doctest::Approx(expected).epsilon(1e-14));
  CHECK(diffusion_clock_ratio(0.25, 7.0) ==
        doctest::Approx(M_PI * M_PI * 7.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("empirical angle variance matches the uniform law") {
  JumpConfig config;
  config.dimension = 5;
  config.epsilon = 0.5;
  config.horizon = 2.0;
  config.seed = 309;
  NoiseStream rng0(101, 0);
  const StateVector init = sample_uniform_sphere(5, rng0);
  Accumulator sq;
  for (std::size_t traj = 0; traj < 200; ++traj) {
    NoiseStream rng(config.seed, traj);
    for (const auto& e : simulate_kac(config, init, rng).events()) {
      sq.add(e.theta * e.theta);
    }
  }
  const double expected = (0.5 * M_PI) * (0.5 * M_PI) / 3.0;
  CHECK(std::abs(sq.mean - expected) < 3.0 * sq.se());
}

TEST_CASE("diffusion limit report smoke run") {
  NoiseStream rng0(102, 0);
  const StateVector init = [&] {
    const double c[] = {1.0};
    return make_initial_state(c, 6, NoiseStream(103, 0));
  }();
  const DiffusionLimitReport report = diffusion_limit_report(
      6, init, {0.5, 0.125}, 1.0, 3000, 310, 1e-3, 0);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].epsilon == 0.5);
  CHECK(report.rows[0].clock_ratio ==
        doctest::Approx(M_PI * M_PI * 6.0 / 3.0).epsilon(1e-12));
  CHECK(report.rows[0].ks_distance >= 0.0);
  CHECK(report.rows[0].ks_distance < 0.5);
  // The finer angle law should not be farther from the diffusion (2 SE slack
  // plus a little, at this reduced scale).
  CHECK(report.rows[1].ks_distance <=
        report.rows[0].ks_distance + 3.0 * report.rows[0].ks_se);
  // Epsilons must decrease.
  CHECK_THROWS_AS(
      diffusion_limit_report(6, init, {0.125, 0.5}, 1.0, 100, 1, 1e-3, 0),
      Error);
}
