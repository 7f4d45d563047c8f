// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#include "spherelab/momentum.hpp"

#include <algorithm>
#include <cmath>

#include "spherelab/errors.hpp"
#include "spherelab/runner.hpp"
#include "spherelab/steppers.hpp"
#include "spherelab/summary.hpp"

namespace spherelab {
namespace {

double norm_sq(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

}  // namespace

std::array<double, 3> MomentumState::momentum_residual() const {
  std::array<double, 3> sum{0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < particles; ++k) {
    for (int g = 0; g < 3; ++g) sum[g] += velocities[3 * k + g];
  }
  const double n = static_cast<double>(particles);
  for (int g = 0; g < 3; ++g) sum[g] -= n * u0[g];
  return sum;
}

double MomentumState::energy_residual() const {
  return 0.5 * norm_sq(velocities) -
         static_cast<double>(particles) * e0;
}

void MomentumState::validate(double tol) const {
  if (particles < 2) throw_runtime("momentum state needs at least 2 particles");
  if (velocities.size() != 3 * particles) {
    throw_runtime("momentum state: velocity buffer size mismatch");
  }
  if (!(epsilon0() > 0.0)) {
    throw_runtime("momentum state: eps0 = e0 - |u0|^2/2 must be positive");
  }
  const auto mres = momentum_residual();
  const double scale = static_cast<double>(particles);
  for (int g = 0; g < 3; ++g) {
    if (std::abs(mres[g]) > tol * scale) {
      throw_runtime("momentum state: total momentum off the manifold");
    }
  }
  if (std::abs(energy_residual()) > tol * scale * e0) {
    throw_runtime("momentum state: total energy off the manifold");
  }
}

void apply_momentum_projector(std::span<const double> s, std::span<double> w) {
  if (s.size() != w.size() || s.size() % 3 != 0) {
    throw_runtime("momentum projector: size mismatch");
  }
  const double ssq = norm_sq(s);
  if (ssq <= 0.0) throw_runtime("momentum projector: singular (zero) S");
  const std::size_t n3 = s.size();
  const double n = static_cast<double>(n3 / 3);
  double sw = 0.0;
  std::array<double, 3> ew{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n3; ++i) {
    sw += s[i] * w[i];
    ew[i % 3] += w[i];
  }
  const double a = sw / ssq;
  for (std::size_t i = 0; i < n3; ++i) {
    w[i] -= a * s[i] + ew[i % 3] / n;
  }
}

MomentumState step_momentum(const MomentumState& state,
                            std::span<const double> dw, double /*dt*/,
                            RenormPolicy renorm) {
  const std::size_t n3 = 3 * state.particles;
  if (dw.size() != n3) throw_runtime("step_momentum: increment size mismatch");
  std::vector<double> s(n3);
  for (std::size_t i = 0; i < n3; ++i) {
    s[i] = state.velocities[i] - state.u0[i % 3];
  }
  // Heun corrector for the Stratonovich form dV = P(S) o dB.
  std::vector<double> p1(dw.begin(), dw.end());
  apply_momentum_projector(s, p1);
  std::vector<double> s_pred(n3);
  for (std::size_t i = 0; i < n3; ++i) s_pred[i] = s[i] + p1[i];
  std::vector<double> p2(dw.begin(), dw.end());
  apply_momentum_projector(s_pred, p2);
  for (std::size_t i = 0; i < n3; ++i) s[i] += 0.5 * (p1[i] + p2[i]);
  if (renorm == RenormPolicy::per_step) {
    const double target = state.fluctuation_radius_sq();
    const double f = std::sqrt(target / norm_sq(s));
    for (double& v : s) v *= f;
  }
  MomentumState out = state;
  for (std::size_t i = 0; i < n3; ++i) out.velocities[i] = s[i] + state.u0[i % 3];
  return out;
}

GramSchmidtMap::GramSchmidtMap(std::size_t particles) : n_(particles) {
  if (particles < 2) throw_runtime("GramSchmidtMap needs at least 2 particles");
  a_.assign(particles, 0.0);
  for (std::size_t np = 1; np < particles; ++np) {
    const double rem = static_cast<double>(particles - np);
    a_[np] = std::sqrt(rem / (rem + 1.0));
  }
}

std::vector<double> GramSchmidtMap::forward(std::span<const double> v) const {
  if (v.size() != 3 * n_) throw_runtime("GramSchmidt forward: size mismatch");
  std::vector<double> s(3 * n_);
  // Suffix sums T_{n+1} = sum_{i>n} V_i, built backwards.
  std::array<double, 3> tail{0.0, 0.0, 0.0};
  for (std::size_t np = n_; np >= 1; --np) {
    const double* vk = v.data() + 3 * (np - 1);
    if (np < n_) {
      const double inv = 1.0 / static_cast<double>(n_ - np);
      for (int g = 0; g < 3; ++g) {
        s[3 * (np - 1) + g] = a_[np] * (vk[g] - tail[g] * inv);
      }
    }
    for (int g = 0; g < 3; ++g) tail[g] += vk[g];
  }
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n_));
  for (int g = 0; g < 3; ++g) s[3 * (n_ - 1) + g] = tail[g] * inv_sqrt_n;
  return s;
}

std::vector<double> GramSchmidtMap::inverse(std::span<const double> s) const {
  if (s.size() != 3 * n_) throw_runtime("GramSchmidt inverse: size mismatch");
  std::vector<double> v(3 * n_);
  // T_1 = sqrt(N) s_N; V_n = a_n s_n + T_n/(N-n+1); T_{n+1} = T_n - V_n.
  std::array<double, 3> t{};
  const double sqrt_n = std::sqrt(static_cast<double>(n_));
  for (int g = 0; g < 3; ++g) t[g] = sqrt_n * s[3 * (n_ - 1) + g];
  for (std::size_t np = 1; np < n_; ++np) {
    const double denom = static_cast<double>(n_ - np + 1);
    for (int g = 0; g < 3; ++g) {
      const double vn = a_[np] * s[3 * (np - 1) + g] + t[g] / denom;
      v[3 * (np - 1) + g] = vn;
      t[g] -= vn;
    }
  }
  for (int g = 0; g < 3; ++g) v[3 * (n_ - 1) + g] = t[g];
  return v;
}

double GramSchmidtMap::entry(std::size_t n, std::size_t k) const {
  if (n < 1 || n > n_ || k < 1 || k > n_) {
    throw_runtime("GramSchmidtMap::entry: index out of range");
  }
  if (n == n_) return 1.0 / std::sqrt(static_cast<double>(n_));
  if (k < n) return 0.0;
  if (k == n) return a_[n];
  return -a_[n] / static_cast<double>(n_ - n);
}

void MomentumConfig::validate() const {
  if (particles < 2) throw_invalid_spec("momentum model needs N >= 2");
  if (tagged < 1 || tagged >= particles) {
    throw_invalid_spec("tagged particle count must satisfy 1 <= m < N");
  }
  if (!initial.empty() && initial.size() != tagged) {
    throw_invalid_spec("initial velocity list must have one entry per tagged particle");
  }
  if (!(epsilon0() > 0.0)) {
    throw_invalid_spec("eps0 = e0 - |u0|^2/2 must be positive");
  }
  if (!(dt > 0.0) || !(horizon > 0.0)) {
    throw_invalid_spec("dt and horizon must be positive");
  }
  if (ensemble < 1) throw_invalid_spec("ensemble size must be >= 1");
}

namespace {

std::vector<std::array<double, 3>> resolved_initial(
    const MomentumConfig& config) {
  if (!config.initial.empty()) return config.initial;
  std::vector<std::array<double, 3>> c(config.tagged);
  for (auto& v : c) v = {1.0, 0.0, 0.0};
  return c;
}

}  // namespace

MomentumState make_momentum_initial(const MomentumConfig& config,
                                    const NoiseStream& rng) {
  config.validate();
  const std::size_t n = config.particles;
  const std::size_t m = config.tagged;
  const auto c = resolved_initial(config);

  std::array<double, 3> c_sum{0.0, 0.0, 0.0};
  double c_sq = 0.0;
  for (const auto& ck : c) {
    for (int g = 0; g < 3; ++g) c_sum[g] += ck[g];
    c_sq += ck[0] * ck[0] + ck[1] * ck[1] + ck[2] * ck[2];
  }
  const double target_sq = 2.0 * static_cast<double>(n) * config.epsilon0();
  const double residual_sq = target_sq - c_sq;
  const std::size_t rest = n - m;
  const double mean_sq =
      (c_sum[0] * c_sum[0] + c_sum[1] * c_sum[1] + c_sum[2] * c_sum[2]) /
      static_cast<double>(rest);
  // The compensating mean shift consumes |sum c|^2/(N-m) of the residual
  // energy; whatever remains is distributed over centered fluctuations.
  const double tol = config.radius_tol * std::max(1.0, target_sq);
  if (residual_sq < mean_sq - tol) {
    throw_runtime("infeasible tagged initial data for the momentum manifold");
  }
  const double spread_sq = std::max(0.0, residual_sq - mean_sq);

  std::vector<double> w(3 * rest, 0.0);
  double scale = 0.0;
  if (rest == 1) {
    // Fully determined: the single residual particle absorbs -sum c, which
    // must match the energy budget exactly.
    if (spread_sq > tol) {
      throw_runtime(
          "infeasible tagged initial data: with N - m = 1 the residual "
          "particle is determined and the energy budget must match exactly");
    }
  } else if (spread_sq > 0.0) {
    // Centered Gaussian fluctuations, rescaled to the remaining energy.
    rng.fill_gaussians(Family::init, 0, w);
    std::array<double, 3> w_mean{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < rest; ++k) {
      for (int g = 0; g < 3; ++g) w_mean[g] += w[3 * k + g];
    }
    for (int g = 0; g < 3; ++g) w_mean[g] /= static_cast<double>(rest);
    double w_sq = 0.0;
    for (std::size_t k = 0; k < rest; ++k) {
      for (int g = 0; g < 3; ++g) {
        w[3 * k + g] -= w_mean[g];
        w_sq += w[3 * k + g] * w[3 * k + g];
      }
    }
    if (w_sq <= 0.0) {
      throw_runtime("degenerate residual fluctuation draw");
    }
    scale = std::sqrt(spread_sq / w_sq);
  }

  MomentumState state;
  state.particles = n;
  state.u0 = config.u0;
  state.e0 = config.e0;
  state.velocities.assign(3 * n, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    for (int g = 0; g < 3; ++g) {
      state.velocities[3 * k + g] = config.u0[g] + c[k][g];
    }
  }
  for (std::size_t k = 0; k < rest; ++k) {
    for (int g = 0; g < 3; ++g) {
      state.velocities[3 * (m + k) + g] =
          config.u0[g] + scale * w[3 * k + g] -
          c_sum[g] / static_cast<double>(rest);
    }
  }
  state.validate(config.radius_tol);
  return state;
}

Prop1Report run_prop1(const MomentumConfig& config, std::size_t workers) {
  config.validate();
  const std::size_t n = config.particles;
  const std::size_t m = config.tagged;
  const auto c = resolved_initial(config);
  const OUParams ou = config.limit_ou();
  const std::size_t steps =
      static_cast<std::size_t>(std::llround(config.horizon / config.dt));
  const std::size_t cps = config.checkpoints;
  const std::vector<std::size_t> cp_steps = checkpoint_steps(steps, cps);
  const std::size_t ensemble = config.ensemble;
  const double sqrt_dt = std::sqrt(config.dt);

  GramSchmidtMap map(n);
  // Column coefficients of the tagged particles: S_k = sum_{q<=k} R[q][k] s_q
  // and B~_k = sum_{q<=k} R[q][k] B'_q + R[N][k] B'_N.
  std::vector<std::vector<double>> col(m);
  for (std::size_t k = 1; k <= m; ++k) {
    col[k - 1].resize(k + 1);
    for (std::size_t q = 1; q <= k; ++q) col[k - 1][q - 1] = map.entry(q, k);
    col[k - 1][k] = map.entry(n, k);
  }

  const std::size_t row_len = m * (cps + 1);
  std::vector<double> rows_msd(ensemble * row_len);
  std::vector<double> terminal_s(ensemble * 6, 0.0);  // S_1, S_2 3-vectors
  std::vector<double> max_mom(ensemble, 0.0);
  std::vector<double> max_energy(ensemble, 0.0);

  const double radius_sq = 2.0 * static_cast<double>(n) * config.epsilon0();

  parallel_trajectories(ensemble, workers, [&](std::size_t traj) {
    NoiseStream rng(config.seed, traj);
    MomentumState init = make_momentum_initial(config, rng);

    // OU references, one 3-vector per tagged particle.
    std::vector<std::array<double, 3>> x(m);
    for (std::size_t k = 0; k < m; ++k) x[k] = c[k];

    std::vector<double> dw(3 * n);
    auto tagged_s = [&](std::span<const double> s, std::size_t k /*1-based*/,
                        std::array<double, 3>& out) {
      out = {0.0, 0.0, 0.0};
      for (std::size_t q = 1; q <= k; ++q) {
        const double r = col[k - 1][q - 1];
        for (int g = 0; g < 3; ++g) out[g] += r * s[3 * (q - 1) + g];
      }
    };

    if (config.direct_stepper) {
      MomentumState state = init;
      auto record = [&](std::size_t cp) {
        for (std::size_t k = 0; k < m; ++k) {
          double dist = 0.0;
          for (int g = 0; g < 3; ++g) {
            const double sk = state.velocities[3 * k + g] - state.u0[g];
            const double diff = sk - x[k][g];
            dist += diff * diff;
          }
          rows_msd[traj * row_len + k * (cps + 1) + cp] = dist;
        }
        max_energy[traj] = std::max(
            max_energy[traj], std::abs(state.energy_residual()));
      };
      record(0);
      std::size_t next_cp = 1;
      while (next_cp <= cps && cp_steps[next_cp] == 0) record(next_cp++);
      for (std::size_t step = 0; step < steps; ++step) {
        rng.fill_increments(Family::sphere_noise, step, sqrt_dt, dw);
        MomentumState next = step_momentum(state, dw, config.dt);
        // Momentum residual of the increment.
        std::array<double, 3> dsum{0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < 3 * n; ++i) {
          dsum[i % 3] += next.velocities[i] - state.velocities[i];
        }
        for (int g = 0; g < 3; ++g) {
          max_mom[traj] = std::max(max_mom[traj], std::abs(dsum[g]));
        }
        state = std::move(next);
        for (std::size_t k = 0; k < m; ++k) {
          std::array<double, 3> db{dw[3 * k], dw[3 * k + 1], dw[3 * k + 2]};
          for (int g = 0; g < 3; ++g) {
            x[k][g] += ou.alpha * db[g] - ou.beta * x[k][g] * config.dt;
          }
        }
        while (next_cp <= cps && cp_steps[next_cp] == step + 1) {
          record(next_cp);
          ++next_cp;
        }
      }
      for (std::size_t k = 0; k < std::min<std::size_t>(m, 2); ++k) {
        for (int g = 0; g < 3; ++g) {
          terminal_s[traj * 6 + 3 * k + g] =
              state.velocities[3 * k + g] - state.u0[g];
        }
      }
      return;
    }

    // Reduced path: the fluctuation sphere in the rotated coordinates.
    SimConfig sphere;
    sphere.dimension = 3 * (n - 1);
    sphere.dt = config.dt;
    sphere.horizon = config.horizon;
    sphere.integrator = IntegratorKind::ito_em;
    sphere.renorm = RenormPolicy::per_step;

    std::vector<double> s_full = map.forward(init.velocities);
    // Fluctuation block s_1..s_{N-1}; s_N = sqrt(N) u0 stays constant.
    StateVector s0(std::vector<double>(s_full.begin(),
                                       s_full.end() - 3));
    PathDriver driver(sphere, s0, rng);

    auto record = [&](std::size_t cp) {
      std::array<double, 3> sk;
      for (std::size_t k = 0; k < m; ++k) {
        tagged_s(driver.state(), k + 1, sk);
        double dist = 0.0;
        for (int g = 0; g < 3; ++g) {
          const double diff = sk[g] - x[k][g];
          dist += diff * diff;
        }
        rows_msd[traj * row_len + k * (cps + 1) + cp] = dist;
      }
      max_energy[traj] =
          std::max(max_energy[traj],
                   0.5 * std::abs(norm_sq(driver.state()) - radius_sq));
    };
    record(0);
    std::size_t next_cp = 1;
    while (next_cp <= cps && cp_steps[next_cp] == 0) record(next_cp++);
    for (std::size_t step = 0; step < steps; ++step) {
      // The sphere consumes channels 0..3(N-1)-1; the block-N channels are
      // drawn only to assemble the tagged particles' driving noise, exactly
      // as the projector discards the mean-velocity noise directions.
      driver.advance();
      for (std::size_t k = 0; k < m; ++k) {
        std::array<double, 3> db{0.0, 0.0, 0.0};
        for (std::size_t q = 1; q <= k + 1; ++q) {
          const double r = col[k][q - 1];
          for (int g = 0; g < 3; ++g) {
            db[g] += r * rng.gaussian(Family::sphere_noise,
                                      3 * (q - 1) + g, step);
          }
        }
        for (int g = 0; g < 3; ++g) {
          db[g] += col[k][k + 1] * rng.gaussian(Family::sphere_noise,
                                                3 * (n - 1) + g, step);
          db[g] *= sqrt_dt;
          x[k][g] += ou.alpha * db[g] - ou.beta * x[k][g] * config.dt;
        }
      }
      while (next_cp <= cps && cp_steps[next_cp] == step + 1) {
        record(next_cp);
        ++next_cp;
      }
    }
    std::array<double, 3> sk;
    for (std::size_t k = 0; k < std::min<std::size_t>(m, 2); ++k) {
      tagged_s(driver.state(), k + 1, sk);
      for (int g = 0; g < 3; ++g) terminal_s[traj * 6 + 3 * k + g] = sk[g];
    }
  });

  Prop1Report report;
  report.particles = n;
  report.tagged = m;
  report.ou = ou;
  report.times.resize(cps + 1);
  for (std::size_t cp = 0; cp <= cps; ++cp) {
    report.times[cp] = static_cast<double>(cp_steps[cp]) * config.dt;
  }
  report.msd.assign(m, std::vector<double>(cps + 1, 0.0));
  report.msd_se.assign(m, std::vector<double>(cps + 1, 0.0));
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t cp = 0; cp <= cps; ++cp) {
      Accumulator acc;
      for (std::size_t traj = 0; traj < ensemble; ++traj) {
        acc.add(rows_msd[traj * row_len + k * (cps + 1) + cp]);
      }
      report.msd[k][cp] = acc.mean;
      report.msd_se[k][cp] = acc.se();
    }
  }
  for (double v : max_mom) {
    report.max_momentum_residual = std::max(report.max_momentum_residual, v);
  }
  for (double v : max_energy) {
    report.max_energy_residual = std::max(report.max_energy_residual, v);
  }
  if (m >= 2) {
    report.cross_cov.assign(9, 0.0);
    report.cross_cov_se.assign(9, 0.0);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        CovAccumulator cov;
        for (std::size_t traj = 0; traj < ensemble; ++traj) {
          cov.add(terminal_s[traj * 6 + a], terminal_s[traj * 6 + 3 + b]);
        }
        report.cross_cov[a * 3 + b] = cov.covariance();
        // SE of the sample covariance via the product-variance plug-in.
        Accumulator prod;
        for (std::size_t traj = 0; traj < ensemble; ++traj) {
          prod.add((terminal_s[traj * 6 + a] - cov.mean_x) *
                   (terminal_s[traj * 6 + 3 + b] - cov.mean_y));
        }
        report.cross_cov_se[a * 3 + b] = prod.se();
      }
    }
  }
  return report;
}

CompensatedNoiseReport compensated_noise_check(std::size_t particles,
                                               double horizon,
                                               std::size_t checkpoints,
                                               std::size_t ensemble,
                                               std::uint64_t seed,
                                               std::size_t workers) {
  if (particles < 1) throw_runtime("compensated_noise_check needs N >= 1");
  CompensatedNoiseReport report;
  report.times.resize(checkpoints + 1);
  const double dt = horizon / static_cast<double>(checkpoints);
  const double sqrt_dt = std::sqrt(dt);
  for (std::size_t cp = 0; cp <= checkpoints; ++cp) {
    report.times[cp] = static_cast<double>(cp) * dt;
    report.theory.push_back(3.0 * report.times[cp] /
                            static_cast<double>(particles));
  }
  std::vector<double> rows(ensemble * (checkpoints + 1), 0.0);
  parallel_trajectories(ensemble, workers, [&](std::size_t traj) {
    NoiseStream rng(seed, traj);
    std::array<double, 3> mean_bm{0.0, 0.0, 0.0};
    std::vector<double> dw(3 * particles);
    for (std::size_t cp = 1; cp <= checkpoints; ++cp) {
      rng.fill_increments(Family::sphere_noise, cp - 1, sqrt_dt, dw);
      for (std::size_t i = 0; i < dw.size(); ++i) mean_bm[i % 3] += dw[i];
      const double inv_n = 1.0 / static_cast<double>(particles);
      double msq = 0.0;
      for (int g = 0; g < 3; ++g) {
        const double v = mean_bm[g] * inv_n;
        msq += v * v;
      }
      rows[traj * (checkpoints + 1) + cp] = msq;
    }
  });
  report.msd.resize(checkpoints + 1);
  report.msd_se.resize(checkpoints + 1);
  for (std::size_t cp = 0; cp <= checkpoints; ++cp) {
    Accumulator acc;
    for (std::size_t traj = 0; traj < ensemble; ++traj) {
      acc.add(rows[traj * (checkpoints + 1) + cp]);
    }
    report.msd[cp] = acc.mean;
    report.msd_se[cp] = acc.se();
  }
  return report;
}

}  // namespace spherelab
