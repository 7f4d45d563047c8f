// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "spherelab/errors.hpp"
#include "spherelab/estimators.hpp"
#include "spherelab/ks.hpp"
#include "spherelab/marginal.hpp"
#include "spherelab/state.hpp"
#include "spherelab/steppers.hpp"
#include "spherelab/summary.hpp"

using namespace spherelab;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Independent route to the nu_N CDF: y^2/N is Beta(1/2, (N-1)/2) under the
// uniform sphere law.
double nu_cdf_beta(double y, std::size_t n) {
  const double nd = static_cast<double>(n);
  const double x = std::min(1.0, y * y / nd);
  const double half = 0.5 * boost::math::ibeta(0.5, (nd - 1.0) / 2.0, x);
  return y >= 0.0 ? 0.5 + half : 0.5 - half;
}

}  // namespace

TEST_CASE("kolmogorov survival function against reference values") {
  // Reference values computed with an independent implementation of the
  // Kolmogorov distribution.
  CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-10));
  CHECK(kolmogorov_sf(0.8) == doctest::Approx(0.5441424115741981).epsilon(1e-10));
  CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-10));
  CHECK(kolmogorov_sf(1.358) == doctest::Approx(0.05002679733444698).epsilon(1e-10));
  CHECK(kolmogorov_sf(1.628) == doctest::Approx(0.009975522431181053).epsilon(1e-10));
  CHECK(kolmogorov_sf(2.0) == doctest::Approx(0.0006709252557796953).epsilon(1e-10));
}

TEST_CASE("ks_test: calibration, degenerate samples, power") {
  SUBCASE("null calibration") {
    NoiseStream rng(101, 0);
    std::vector<double> z(10000);
    rng.fill_gaussians(Family::sphere_noise, 0, z);
    const KsResult ks = ks_test(z, normal_cdf);
    CHECK(ks.p_value > 0.001);
  }
  SUBCASE("constant samples against a continuous law") {
    std::vector<double> z(100, 0.0);
    const KsResult ks = ks_test(z, normal_cdf);
    CHECK(ks.statistic >= 0.5);
  }
  SUBCASE("unit location shift is overwhelmingly detected") {
    NoiseStream rng(102, 0);
    std::vector<double> z(1000);
    rng.fill_gaussians(Family::sphere_noise, 0, z);
    const KsResult ks = ks_test(z, [](double x) { return normal_cdf(x - 1.0); });
    CHECK(ks.p_value < 1e-6);
  }
  SUBCASE("too few samples is an error") {
    std::vector<double> z(10, 0.0);
    CHECK_THROWS_AS(ks_test(z, normal_cdf), Error);
  }
  SUBCASE("two-sample null and power") {
    NoiseStream rng(103, 0);
    std::vector<double> a(5000), b(5000), c(5000);
    rng.fill_gaussians(Family::sphere_noise, 0, a);
    rng.fill_gaussians(Family::sphere_noise, 1, b);
    rng.fill_gaussians(Family::sphere_noise, 2, c);
    for (double& x : c) x += 0.25;
    CHECK(ks_test_two_sample(a, b).p_value > 0.001);
    CHECK(ks_test_two_sample(a, c).p_value < 1e-6);
  }
}

TEST_CASE("nu density closed-form cases") {
  SUBCASE("N = 3 is uniform on [-sqrt(3), sqrt(3)]") {
    const double expected = 1.0 / (2.0 * std::sqrt(3.0));
    for (double y : {-1.5, -0.3, 0.0, 0.9, 1.7}) {
      CHECK(nu_density(y, 3) == doctest::Approx(expected).epsilon(1e-14));
    }
  }
  SUBCASE("support endpoints vanish for N > 3") {
    CHECK(nu_density(std::sqrt(10.0), 10) == 0.0);
    CHECK(nu_density(-std::sqrt(10.0), 10) == 0.0);
    CHECK(nu_density(4.0, 10) == 0.0);  // outside support
  }
  SUBCASE("large N approaches the standard normal at the origin") {
    const double phi0 = 1.0 / std::sqrt(2.0 * M_PI);
    CHECK(std::abs(nu_density(0.0, 1000) / phi0 - 1.0) < 1e-2);
  }
}

TEST_CASE("marginal law: quadrature CDF against the beta-function route") {
  for (std::size_t n : {2, 3, 5, 10, 37, 50}) {
    MarginalLaw law(n);
    CHECK(law.normalization_error() < 1e-8);
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    for (int k = -4; k <= 4; ++k) {
      const double y = 0.24 * static_cast<double>(k) * sqrt_n;
      CHECK(law.cdf(y) == doctest::Approx(nu_cdf_beta(y, n)).epsilon(5e-7));
    }
    CHECK(law.cdf(-sqrt_n - 1.0) == 0.0);
    CHECK(law.cdf(sqrt_n + 1.0) == 1.0);
  }
}

TEST_CASE("marginal law matches empirical sphere coordinates") {
  const std::size_t n = 10;
  const std::size_t m = 40000;
  std::vector<double> samples(m);
  for (std::size_t i = 0; i < m; ++i) {
    NoiseStream rng(104, i);
    samples[i] = sample_uniform_sphere(n, rng)[0];
  }
  MarginalLaw law(n);
  const KsResult ks = ks_test(samples, [&](double y) { return law.cdf(y); });
  CHECK(ks.p_value > 0.001);
}

TEST_CASE("lift map") {
  SUBCASE("zero coordinate scales by sqrt(N/(N-1))") {
    NoiseStream rng(105, 0);
    const StateVector u = sample_uniform_sphere(9, rng);  // N = 10
    const StateVector lifted = lift_phi(u, 0.0);
    REQUIRE(lifted.dimension() == 10);
    const double s = std::sqrt(10.0 / 9.0);
    for (std::size_t i = 0; i < 9; ++i) {
      CHECK(lifted[i] == doctest::Approx(s * u[i]).epsilon(1e-14));
    }
    CHECK(lifted[9] == 0.0);
    CHECK(lifted.norm_sq() == doctest::Approx(10.0).epsilon(1e-12));
  }
  SUBCASE("pole") {
    NoiseStream rng(106, 0);
    const StateVector u = sample_uniform_sphere(9, rng);
    const StateVector lifted = lift_phi(u, std::sqrt(10.0));
    for (std::size_t i = 0; i < 9; ++i) CHECK(lifted[i] == 0.0);
    CHECK(lifted[9] == doctest::Approx(std::sqrt(10.0)));
  }
  SUBCASE("off-sphere input is a contract violation") {
    StateVector u(std::vector<double>{1.0, 1.0, 1.0});
    StateVector bad(std::vector<double>{1.5, 1.0, 1.0});
    CHECK_NOTHROW(lift_phi(u, 0.5));
    CHECK_THROWS_AS(lift_phi(bad, 0.5), Error);
  }
}

TEST_CASE("lift of (uniform, marginal) is uniform (feature-3 sampling)") {
  const std::size_t n = 10;
  const std::size_t m = 40000;
  std::vector<double> lifted(m);
  for (std::size_t i = 0; i < m; ++i) {
    NoiseStream rng_u(107, i);
    NoiseStream rng_y(108, i);
    const StateVector u = sample_uniform_sphere(n - 1, rng_u);
    const double y = sample_uniform_sphere(n, rng_y)[0];
    lifted[i] = lift_phi(u, y)[0];
  }
  MarginalLaw law(n);
  const KsResult ks = ks_test(lifted, [&](double y) { return law.cdf(y); });
  CHECK(ks.p_value > 0.001);
}

TEST_CASE("ou baseline moments") {
  const OUParams params{1.0, 0.5};
  SUBCASE("initial time") {
    const OUMoments m = ou_baseline(1.7, 0.0, params);
    CHECK(m.mean == 1.7);
    CHECK(m.variance == 0.0);
  }
  SUBCASE("stationary limit") {
    const OUMoments m = ou_baseline(3.0, 200.0, params);
    CHECK(m.mean == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m.variance == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("closed form at t = 2") {
    const OUMoments m = ou_baseline(1.0, 2.0, params);
    CHECK(m.mean == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(m.variance ==
          doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-14));
  }
  SUBCASE("beta must be positive") {
    CHECK_THROWS_AS(ou_baseline(1.0, 1.0, OUParams{1.0, 0.0}), Error);
  }
}

TEST_CASE("chaos metric") {
  SUBCASE("synthetic correlated data") {
    NoiseStream rng(109, 0);
    const std::size_t m = 2000;
    std::vector<double> rows(3 * m);
    for (std::size_t r = 0; r < m; ++r) {
      const double x = rng.gaussian(Family::init, 0, r);
      const double y = rng.gaussian(Family::init, 1, r);
      rows[3 * r] = x;
      rows[3 * r + 1] = x;
      rows[3 * r + 2] = y;
    }
    const ChaosMetric metric = chaos_metric(rows, 3);
    CHECK(metric.score == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(metric.covariance[0 * 3 + 1] ==
          doctest::Approx(metric.covariance[0]).epsilon(1e-9));
  }
  SUBCASE("independent data scores near zero") {
    NoiseStream rng(110, 0);
    const std::size_t m = 20000;
    std::vector<double> rows(2 * m);
    rng.fill_gaussians(Family::init, 0, rows);
    const ChaosMetric metric = chaos_metric(rows, 2);
    CHECK(metric.score < 4.0 / std::sqrt(static_cast<double>(m)));
  }
  SUBCASE("sphere constraint forces square correlation -1/(d-1)") {
    // Components of a uniform point on the 2-sphere are uncorrelated by sign
    // symmetry, but their squares carry the energy constraint exactly.
    const std::size_t m = 40000;
    std::vector<double> rows(3 * m);
    for (std::size_t r = 0; r < m; ++r) {
      NoiseStream rng(111, r);
      const StateVector v = sample_uniform_sphere(3, rng);
      for (int j = 0; j < 3; ++j) rows[3 * r + j] = v[j];
    }
    const ChaosMetric metric = chaos_metric(rows, 3);
    const double sq_corr =
        metric.sq_covariance[0 * 3 + 1] /
        std::sqrt(metric.sq_covariance[0] * metric.sq_covariance[4]);
    CHECK(sq_corr == doctest::Approx(-0.5).epsilon(0.05));
    CHECK(metric.score > 0.4);
  }
}

TEST_CASE("chi-square against Poisson counts") {
  // Knuth multiplication sampler driven by the addressable uniforms.
  auto sample_poisson = [](double mu, const NoiseStream& rng,
                           std::uint64_t row) {
    const double limit = std::exp(-mu);
    double prod = 1.0;
    std::uint64_t k = 0;
    while (true) {
      prod *= rng.uniform(Family::jump_pair, row, k);
      if (prod <= limit) return k;
      ++k;
    }
  };
  const double mu = 4.0;
  std::vector<std::uint64_t> counts(4000);
  NoiseStream rng(112, 0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    counts[i] = sample_poisson(mu, rng, i);
  }
  const ChiSquareResult null_fit = chi_square_poisson(counts, mu);
  CHECK(null_fit.p_value > 0.005);
  const ChiSquareResult wrong_fit = chi_square_poisson(counts, 5.0);
  CHECK(wrong_fit.p_value < 1e-6);
}

TEST_CASE("quadratic covariation against the projector integral") {
  SimConfig config;
  config.dimension = 6;
  config.dt = 1e-3;
  config.horizon = 1.0;
  config.seed = 113;

  SUBCASE("diagonal entry, ensemble-averaged within 5%") {
    const std::size_t m = 20;
    double cov_sum = 0.0, sigma_sum = 0.0;
    for (std::size_t traj = 0; traj < m; ++traj) {
      NoiseStream rng(config.seed, traj);
      const StateVector init = sample_uniform_sphere(config.dimension, rng);
      const Trajectory path = simulate_path(config, init, rng, true);
      const CovariationSeries series = quadratic_covariation(path, 0, 0);
      cov_sum += series.covariation.back();
      sigma_sum += series.sigma_integral.back();
    }
    CHECK(std::abs(cov_sum / sigma_sum - 1.0) < 0.05);
  }
  SUBCASE("near-polar state has near-zero tagged covariation rate") {
    std::vector<double> polar(config.dimension, 0.0);
    polar[0] = std::sqrt(static_cast<double>(config.dimension));
    config.horizon = 0.01;
    NoiseStream rng(114, 0);
    const Trajectory path =
        simulate_path(config, StateVector(polar), rng, true);
    const CovariationSeries series = quadratic_covariation(path, 0, 0);
    CHECK(series.covariation.back() < 5.0 * config.horizon * 0.05);
  }
  SUBCASE("off-diagonal with vanishing components starts at rate zero") {
    std::vector<double> state(config.dimension, 0.0);
    state[2] = std::sqrt(static_cast<double>(config.dimension));
    NoiseStream rng(115, 0);
    config.horizon = 1e-3;  // single step
    const Trajectory path =
        simulate_path(config, StateVector(state), rng, true);
    const CovariationSeries series = quadratic_covariation(path, 0, 1);
    // sigma_01(V(0)) = 0 exactly; after one step the trapezoid picks up only
    // an O(dt^2) contribution from the noise products.
    const double sigma0 = -path.states[0][0] * path.states[0][1] / 6.0;
    CHECK(sigma0 == 0.0);
    CHECK(std::abs(series.sigma_integral.back()) < 1e-6);
  }
  SUBCASE("martingale capture is required") {
    NoiseStream rng(116, 0);
    const StateVector init = sample_uniform_sphere(config.dimension, rng);
    const Trajectory path = simulate_path(config, init, rng, false);
    CHECK_THROWS_AS(quadratic_covariation(path, 0, 1), Error);
  }
}

TEST_CASE("small tagged component: unit diffusivity and vanishing drift") {
  SimConfig config;
  config.dimension = 100;
  config.dt = 1e-3;
  config.horizon = 2.0;
  config.ensemble = 50;
  config.seed = 117;
  const ConditionalMoments m =
      conditional_increment_moments(config, 0, 0.1, 0);
  CHECK(std::abs(m.drift) < 3.0 * m.drift_se);
  CHECK(std::abs(m.diffusivity - 1.0) < 0.05);
}

TEST_CASE("summary merge is associative and commutative (1e-12 relative)") {
  auto make = [](std::uint64_t seed, std::size_t count) {
    EnsembleSummary s({0.0, 1.0}, {"a", "b"});
    NoiseStream rng(seed, 0);
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t cp = 0; cp < 2; ++cp) {
        s.add(cp, 0, rng.gaussian(Family::init, cp, i));
        s.add(cp, 1, rng.uniform(Family::init, cp + 2, i));
      }
    }
    return s;
  };
  const EnsembleSummary a = make(1, 100);
  const EnsembleSummary b = make(2, 57);
  const EnsembleSummary c = make(3, 211);

  EnsembleSummary ab = a;
  ab.merge(b);
  EnsembleSummary ba = b;
  ba.merge(a);
  EnsembleSummary ab_c = ab;
  ab_c.merge(c);
  EnsembleSummary bc = b;
  bc.merge(c);
  EnsembleSummary a_bc = a;
  a_bc.merge(bc);
  for (std::size_t cp = 0; cp < 2; ++cp) {
    for (std::size_t ch = 0; ch < 2; ++ch) {
      CHECK(ab.at(cp, ch).mean ==
            doctest::Approx(ba.at(cp, ch).mean).epsilon(1e-12));
      CHECK(ab.at(cp, ch).m2 ==
            doctest::Approx(ba.at(cp, ch).m2).epsilon(1e-12));
      CHECK(ab_c.at(cp, ch).mean ==
            doctest::Approx(a_bc.at(cp, ch).mean).epsilon(1e-12));
      CHECK(ab_c.at(cp, ch).m2 ==
            doctest::Approx(a_bc.at(cp, ch).m2).epsilon(1e-12));
      CHECK(ab_c.at(cp, ch).n == a_bc.at(cp, ch).n);
    }
  }
}
