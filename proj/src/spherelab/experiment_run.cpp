// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "spherelab/coupling.hpp"
#include "spherelab/errors.hpp"
#include "spherelab/experiment.hpp"
#include "spherelab/ks.hpp"
#include "spherelab/marginal.hpp"
#include "spherelab/runner.hpp"
#include "spherelab/steppers.hpp"
#include "spherelab/summary.hpp"
#include "spherelab/version.hpp"

namespace spherelab {
namespace {

using nlohmann::json;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct ExperimentOutput {
  std::map<std::string, Table> tables;
  bool partial = false;
};

// ---------------------------------------------------------------------------
// simulate

ExperimentOutput run_simulate(const ExperimentSpec& spec) {
  const SimConfig& sim = spec.sim;
  const std::size_t cps = spec.checkpoints;
  const std::size_t steps = sim.steps();
  const std::vector<std::size_t> cp_steps = checkpoint_steps(steps, cps);
  const std::size_t m = sim.ensemble;
  const bool want_terminal =
      std::find(spec.checks.begin(), spec.checks.end(), "stationarity") !=
      spec.checks.end();

  const std::size_t row_len = cps + 1;
  std::vector<double> rows_v1(m * row_len);
  std::vector<double> rows_v1sq(m * row_len);
  std::vector<double> rows_drift(m * row_len);
  std::vector<double> terminal(want_terminal ? m : 0);

  parallel_trajectories(m, spec.workers, [&](std::size_t traj) {
    NoiseStream rng(sim.seed, traj);
    StateVector init = make_initial_state(spec.initial, sim.dimension, rng);
    const double target = init.norm_sq();
    const std::size_t tag = sim.tagged.empty() ? 0 : sim.tagged[0];

    if (sim.integrator == IntegratorKind::kac_jump) {
      JumpConfig jc;
      jc.dimension = sim.dimension;
      jc.epsilon = sim.epsilon;
      const double kappa = diffusion_clock_ratio(sim.epsilon, target);
      jc.horizon = sim.horizon / kappa;
      JumpTrajectory jt = simulate_kac(jc, init, rng);
      auto cursor = jt.cursor();
      for (std::size_t cp = 0; cp <= cps; ++cp) {
        const double t = static_cast<double>(cp_steps[cp]) * sim.dt;
        const StateVector& st = cursor.advance_to(t / kappa);
        const double v1 = st[tag];
        rows_v1[traj * row_len + cp] = v1;
        rows_v1sq[traj * row_len + cp] = v1 * v1;
        rows_drift[traj * row_len + cp] = st.norm_sq() - target;
        if (want_terminal && cp == cps) terminal[traj] = v1;
      }
      return;
    }

    PathDriver driver(sim, init, rng);
    auto record = [&](std::size_t cp) {
      const double v1 = driver.state()[tag];
      rows_v1[traj * row_len + cp] = v1;
      rows_v1sq[traj * row_len + cp] = v1 * v1;
      double nsq = 0.0;
      for (double c : driver.state()) nsq += c * c;
      rows_drift[traj * row_len + cp] = nsq - target;
      if (want_terminal && cp == cps) terminal[traj] = v1;
    };
    record(0);
    std::size_t next_cp = 1;
    while (next_cp <= cps && cp_steps[next_cp] == 0) record(next_cp++);
    for (std::size_t k = 0; k < steps; ++k) {
      driver.advance();
      while (next_cp <= cps && cp_steps[next_cp] == k + 1) {
        record(next_cp);
        ++next_cp;
      }
    }
  });

  const double c1_sq =
      spec.initial.empty() ? 0.0 : spec.initial[0] * spec.initial[0];

  Table moments;
  moments.columns = {"t",        "ev1sq",      "ev1sq_se",   "ev1sq_ref",
                     "ev1sq_relax", "v1_mean", "v1_mean_se", "drift_mean",
                     "drift_max_abs"};
  for (std::size_t cp = 0; cp <= cps; ++cp) {
    const double t = static_cast<double>(cp_steps[cp]) * sim.dt;
    Accumulator v1, v1sq;
    double drift_mean = 0.0, drift_max = 0.0;
    for (std::size_t traj = 0; traj < m; ++traj) {
      v1.add(rows_v1[traj * row_len + cp]);
      v1sq.add(rows_v1sq[traj * row_len + cp]);
      const double d = rows_drift[traj * row_len + cp];
      drift_mean += d;
      drift_max = std::max(drift_max, std::abs(d));
    }
    drift_mean /= static_cast<double>(m);
    moments.add_row({t, v1sq.mean, v1sq.se(),
                     theory_ev1sq(c1_sq, sim.dimension, t),
                     ev1sq_relaxation(c1_sq, t), v1.mean, v1.se(), drift_mean,
                     drift_max});
  }

  ExperimentOutput out;
  out.tables.emplace("moments", std::move(moments));
  if (want_terminal) {
    Table term;
    term.columns = {"trajectory", "v1"};
    for (std::size_t traj = 0; traj < m; ++traj) {
      term.add_row({static_cast<double>(traj), terminal[traj]});
    }
    out.tables.emplace("terminal", std::move(term));
  }
  return out;
}

// ---------------------------------------------------------------------------
// couple

ExperimentOutput run_couple(const ExperimentSpec& spec) {
  CoupleOptions options;
  options.params = spec.ou;
  options.checkpoints = spec.checkpoints;
  options.workers = spec.workers;
  options.independent_noise = spec.couple_independent_noise;
  options.ou_exact = spec.couple_ou_exact;
  CouplingReport report = run_coupled(spec.sim, spec.initial, options);

  Table msd;
  msd.columns = {"t", "msd", "se", "bound", "ev1sq", "ev1sq_se"};
  for (std::size_t cp = 0; cp < report.times.size(); ++cp) {
    msd.add_row({report.times[cp], report.msd[cp], report.msd_se[cp],
                 report.bound[cp], report.ev1sq[cp], report.ev1sq_se[cp]});
  }
  ExperimentOutput out;
  out.tables.emplace("msd", std::move(msd));
  return out;
}

// ---------------------------------------------------------------------------
// chaos

ExperimentOutput run_chaos(const ExperimentSpec& spec) {
  const SimConfig& sim = spec.sim;
  const std::size_t d = sim.tagged.size();
  const std::size_t m = sim.ensemble;
  const std::size_t steps = sim.steps();
  std::vector<double> rows(m * d);
  parallel_trajectories(m, spec.workers, [&](std::size_t traj) {
    NoiseStream rng(sim.seed, traj);
    StateVector init = make_initial_state(spec.initial, sim.dimension, rng);
    PathDriver driver(sim, init, rng);
    for (std::size_t k = 0; k < steps; ++k) driver.advance();
    for (std::size_t j = 0; j < d; ++j) {
      rows[traj * d + j] = driver.state()[sim.tagged[j]];
    }
  });
  const ChaosMetric metric = chaos_metric(rows, d);

  Table table;
  table.columns = {"i", "j", "cov", "sq_cov", "corr", "sq_corr"};
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      const double den =
          std::sqrt(metric.covariance[i * d + i] * metric.covariance[j * d + j]);
      const double den_sq = std::sqrt(metric.sq_covariance[i * d + i] *
                                      metric.sq_covariance[j * d + j]);
      table.add_row({static_cast<double>(i), static_cast<double>(j),
                     metric.covariance[i * d + j],
                     metric.sq_covariance[i * d + j],
                     den > 0.0 ? metric.covariance[i * d + j] / den : 0.0,
                     den_sq > 0.0 ? metric.sq_covariance[i * d + j] / den_sq
                                  : 0.0});
    }
  }
  ExperimentOutput out;
  out.tables.emplace("chaos", std::move(table));
  return out;
}

// ---------------------------------------------------------------------------
// kac

ExperimentOutput run_kac(const ExperimentSpec& spec) {
  ExperimentOutput out;
  const std::size_t dim = spec.jump.dimension;
  const std::size_t pairs = pair_count(dim);
  const std::size_t m = spec.jump_ensemble;

  StateVector initial = [&] {
    NoiseStream rng(derive_seed(spec.seed, 0x1213), 0);
    return make_initial_state(spec.jump_initial, dim, rng);
  }();

  Table stats;
  stats.columns = {"epsilon",    "expected_count", "events_total",
                   "chi2_stat",  "chi2_dof",       "chi2_p",
                   "angle_mean", "angle_se",       "max_energy_drift",
                   "truncated"};
  bool partial = false;
  for (double eps : spec.jump_epsilons) {
    JumpConfig jc = spec.jump;
    jc.epsilon = eps;
    jc.seed = derive_seed(spec.seed, 0xAC0 + static_cast<std::uint64_t>(
                                                 eps * 1e6));
    std::vector<std::uint64_t> counts(m * pairs, 0);
    std::vector<double> angle_sum(m, 0.0);
    std::vector<double> angle_sq(m, 0.0);
    std::vector<std::uint64_t> events(m, 0);
    std::vector<double> energy_drift(m, 0.0);
    std::vector<int> truncated(m, 0);
    parallel_trajectories(m, spec.workers, [&](std::size_t traj) {
      NoiseStream rng(jc.seed, traj);
      JumpTrajectory jt = simulate_kac(jc, initial, rng);
      truncated[traj] = jt.truncated() ? 1 : 0;
      events[traj] = jt.events().size();
      for (std::size_t p = 0; p < pairs; ++p) {
        counts[traj * pairs + p] = jt.pair_counts()[p];
      }
      for (const auto& e : jt.events()) {
        angle_sum[traj] += e.theta;
        angle_sq[traj] += e.theta * e.theta;
      }
      energy_drift[traj] =
          std::abs(jt.terminal().norm_sq() - jt.initial().norm_sq());
    });

    bool any_trunc = false;
    std::uint64_t total_events = 0;
    double max_drift = 0.0;
    Accumulator angle;
    for (std::size_t traj = 0; traj < m; ++traj) {
      any_trunc = any_trunc || truncated[traj] != 0;
      total_events += events[traj];
      max_drift = std::max(max_drift, energy_drift[traj]);
    }
    // Angle moments pooled over events (mean 0 under the even law).
    double a_sum = 0.0, a_sq = 0.0;
    for (std::size_t traj = 0; traj < m; ++traj) {
      a_sum += angle_sum[traj];
      a_sq += angle_sq[traj];
    }
    const double n_ev = static_cast<double>(total_events);
    const double angle_mean = n_ev > 0 ? a_sum / n_ev : 0.0;
    const double angle_var =
        n_ev > 1 ? (a_sq - n_ev * angle_mean * angle_mean) / (n_ev - 1.0)
                 : 0.0;
    const double angle_se = n_ev > 0 ? std::sqrt(angle_var / n_ev) : 0.0;

    const double mu = jc.pair_rate() * jc.horizon;
    ChiSquareResult chi{0.0, 0, 1.0};
    if (!any_trunc) {
      chi = chi_square_poisson(counts, mu);
    }
    partial = partial || any_trunc;
    stats.add_row({eps, mu, static_cast<double>(total_events), chi.statistic,
                   static_cast<double>(chi.dof), chi.p_value, angle_mean,
                   angle_se, max_drift, any_trunc ? 1.0 : 0.0});
  }
  out.tables.emplace("kac_stats", std::move(stats));

  if (spec.jump_diffusion_compare && !partial) {
    try {
      DiffusionLimitReport limit = diffusion_limit_report(
          dim, initial, spec.jump_epsilons, spec.jump_diffusion_horizon,
          spec.jump_limit_ensemble, derive_seed(spec.seed, 0x11F7),
          spec.jump_reference_dt, spec.workers);
      Table table;
      table.columns = {"epsilon", "ks_distance", "ks_se", "clock_ratio"};
      for (const auto& row : limit.rows) {
        table.add_row({row.epsilon, row.ks_distance, row.ks_se,
                       row.clock_ratio});
      }
      out.tables.emplace("kac_limit", std::move(table));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::budget_exceeded) throw;
      partial = true;
    }
  }
  out.partial = partial;
  return out;
}

// ---------------------------------------------------------------------------
// momentum

ExperimentOutput run_momentum(const ExperimentSpec& spec) {
  MomentumConfig config = spec.momentum;
  config.seed = spec.seed;
  Prop1Report report = run_prop1(config, spec.workers);

  ExperimentOutput out;
  Table msd;
  msd.columns = {"t"};
  for (std::size_t k = 0; k < report.tagged; ++k) {
    msd.columns.push_back("msd" + std::to_string(k + 1));
    msd.columns.push_back("msd" + std::to_string(k + 1) + "_se");
  }
  for (std::size_t cp = 0; cp < report.times.size(); ++cp) {
    std::vector<double> row = {report.times[cp]};
    for (std::size_t k = 0; k < report.tagged; ++k) {
      row.push_back(report.msd[k][cp]);
      row.push_back(report.msd_se[k][cp]);
    }
    msd.add_row(std::move(row));
  }
  out.tables.emplace("momentum_msd", std::move(msd));

  if (report.tagged >= 2) {
    Table cc;
    cc.columns = {"a", "b", "cov", "se"};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        cc.add_row({static_cast<double>(a), static_cast<double>(b),
                    report.cross_cov[a * 3 + b],
                    report.cross_cov_se[a * 3 + b]});
      }
    }
    out.tables.emplace("cross_cov", std::move(cc));
  }

  // Gram-Schmidt round-trip residual at this N (random state).
  double gs_error = 0.0;
  {
    GramSchmidtMap map(config.particles);
    NoiseStream rng(derive_seed(spec.seed, 0x65), 0);
    std::vector<double> v(3 * config.particles);
    rng.fill_gaussians(Family::init, 1, v);
    const std::vector<double> s = map.forward(v);
    const std::vector<double> back = map.inverse(s);
    for (std::size_t i = 0; i < v.size(); ++i) {
      gs_error = std::max(gs_error, std::abs(back[i] - v[i]));
    }
  }
  Table cons;
  cons.columns = {"particles", "max_momentum_residual", "max_energy_residual",
                  "gs_roundtrip_error"};
  cons.add_row({static_cast<double>(report.particles),
                report.max_momentum_residual, report.max_energy_residual,
                gs_error});
  out.tables.emplace("conservation", std::move(cons));

  if (spec.momentum_compensated) {
    CompensatedNoiseReport comp = compensated_noise_check(
        config.particles, config.horizon, spec.momentum_checkpoints,
        config.ensemble, derive_seed(spec.seed, 0xC09), spec.workers);
    Table table;
    table.columns = {"t", "msd", "se", "theory"};
    for (std::size_t cp = 0; cp < comp.times.size(); ++cp) {
      table.add_row(
          {comp.times[cp], comp.msd[cp], comp.msd_se[cp], comp.theory[cp]});
    }
    out.tables.emplace("compensated", std::move(table));
  }
  return out;
}

// ---------------------------------------------------------------------------
// marginal

ExperimentOutput run_marginal(const ExperimentSpec& spec) {
  const std::size_t n = spec.marginal_dimension;
  const std::size_t m = spec.marginal_samples;
  MarginalLaw law(n, spec.marginal_quad_intervals);

  std::vector<double> samples(m);
  parallel_trajectories(m, spec.workers, [&](std::size_t i) {
    NoiseStream rng(spec.seed, i);
    samples[i] = sample_uniform_sphere(n, rng)[0];
  });
  const KsResult ks = ks_test(samples, [&](double y) { return law.cdf(y); });

  double ks_normal_stat = std::nan("");
  double ks_normal_p = std::nan("");
  if (spec.marginal_compare_normal) {
    const KsResult kn = ks_test(samples, normal_cdf);
    ks_normal_stat = kn.statistic;
    ks_normal_p = kn.p_value;
  }

  double lift_stat = std::nan("");
  double lift_p = std::nan("");
  if (spec.marginal_lift_check) {
    // u uniform on the lower sphere, y by the marginal law (first coordinate
    // of an independent uniform sample), lifted point must be uniform: its
    // first coordinate is tested against the marginal law again.
    std::vector<double> lifted(m);
    const std::uint64_t seed_u = derive_seed(spec.seed, 0x711);
    const std::uint64_t seed_y = derive_seed(spec.seed, 0x712);
    parallel_trajectories(m, spec.workers, [&](std::size_t i) {
      NoiseStream rng_u(seed_u, i);
      NoiseStream rng_y(seed_y, i);
      StateVector u = sample_uniform_sphere(n - 1, rng_u);
      const double y = sample_uniform_sphere(n, rng_y)[0];
      lifted[i] = lift_phi(u, y)[0];
    });
    const KsResult kl = ks_test(lifted, [&](double y) { return law.cdf(y); });
    lift_stat = kl.statistic;
    lift_p = kl.p_value;
  }

  ExperimentOutput out;
  Table density;
  density.columns = {"y", "density", "cdf"};
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const std::size_t grid = 201;
  for (std::size_t g = 0; g < grid; ++g) {
    const double y = -sqrt_n + 2.0 * sqrt_n * static_cast<double>(g) /
                                  static_cast<double>(grid - 1);
    density.add_row({y, law.density(y), law.cdf(y)});
  }
  out.tables.emplace("marginal_density", std::move(density));

  Table stats;
  stats.columns = {"dimension",      "samples",     "ks_stat",
                   "ks_p",           "norm_error",  "ks_normal_stat",
                   "ks_normal_p",    "lift_ks_stat", "lift_ks_p"};
  stats.add_row({static_cast<double>(n), static_cast<double>(m), ks.statistic,
                 ks.p_value, law.normalization_error(), ks_normal_stat,
                 ks_normal_p, lift_stat, lift_p});
  out.tables.emplace("marginal_stats", std::move(stats));
  return out;
}

// ---------------------------------------------------------------------------
// covariation

ExperimentOutput run_covariation(const ExperimentSpec& spec) {
  const SimConfig base = spec.sim;
  const std::size_t cps = spec.cov_checkpoints;
  const std::size_t steps = base.steps();
  const std::vector<std::size_t> cp_steps = checkpoint_steps(steps, cps);
  const std::size_t m = base.ensemble;
  const std::size_t npairs = spec.cov_pairs.size();
  const std::size_t n = base.dimension;

  ExperimentOutput out;
  for (const std::string& rep : spec.cov_representations) {
    SimConfig sim = base;
    sim.integrator = rep == "rotation" ? IntegratorKind::rotation
                                       : IntegratorKind::ito_em;
    sim.seed = derive_seed(spec.seed, rep == "rotation" ? 0xF07 : 0xF01);

    // Per-trajectory, per-window sums of dM_i dM_j and of sigma_ij(V) dt.
    const std::size_t row_len = cps * npairs;
    std::vector<double> rows_cov(m * row_len, 0.0);
    std::vector<double> rows_sigma(m * row_len, 0.0);
    parallel_trajectories(m, spec.workers, [&](std::size_t traj) {
      NoiseStream rng(sim.seed, traj);
      StateVector init = make_initial_state(spec.initial, n, rng);
      PathDriver driver(sim, init, rng);
      std::vector<double> mart(n);
      std::size_t window = 0;
      for (std::size_t k = 0; k < steps; ++k) {
        while (window + 1 < cps && cp_steps[window + 1] <= k) ++window;
        const double* v = driver.state().data();
        double vsq = 0.0;
        for (std::size_t i = 0; i < n; ++i) vsq += v[i] * v[i];
        for (std::size_t p = 0; p < npairs; ++p) {
          const auto [i, j] = spec.cov_pairs[p];
          const double delta = i == j ? 1.0 : 0.0;
          rows_sigma[traj * row_len + window * npairs + p] +=
              (delta - v[i] * v[j] / vsq) * sim.dt;
        }
        driver.advance(mart);
        for (std::size_t p = 0; p < npairs; ++p) {
          const auto [i, j] = spec.cov_pairs[p];
          rows_cov[traj * row_len + window * npairs + p] += mart[i] * mart[j];
        }
      }
    });

    Table table;
    table.columns = {"t", "i", "j", "rate", "rate_se", "sigma_mean",
                     "sigma_se"};
    for (std::size_t w = 0; w < cps; ++w) {
      const double t0 = static_cast<double>(cp_steps[w]) * sim.dt;
      const double t1 = static_cast<double>(cp_steps[w + 1]) * sim.dt;
      const double width = t1 - t0;
      if (width <= 0.0) continue;
      for (std::size_t p = 0; p < npairs; ++p) {
        Accumulator rate, sigma;
        for (std::size_t traj = 0; traj < m; ++traj) {
          rate.add(rows_cov[traj * row_len + w * npairs + p] / width);
          sigma.add(rows_sigma[traj * row_len + w * npairs + p] / width);
        }
        table.add_row({t1, static_cast<double>(spec.cov_pairs[p].first),
                       static_cast<double>(spec.cov_pairs[p].second),
                       rate.mean, rate.se(), sigma.mean, sigma.se()});
      }
    }
    out.tables.emplace("covariation_" + rep, std::move(table));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// checks

namespace {

void add_check(std::vector<CheckResult>& checks, const std::string& name,
               bool pass, double value, double threshold,
               const std::string& comparator, const std::string& details) {
  checks.push_back({name, pass, value, threshold, comparator, details});
}

const Table& need(const std::map<std::string, Table>& tables,
                  const std::string& name) {
  auto it = tables.find(name);
  if (it == tables.end()) throw_runtime("missing output table '" + name + "'");
  return it->second;
}

}  // namespace

std::vector<CheckResult> evaluate_checks(
    const ExperimentSpec& spec, const std::map<std::string, Table>& tables) {
  std::vector<CheckResult> checks;
  switch (spec.kind) {
    case ExperimentKind::simulate: {
      const Table& moments = need(tables, "moments");
      for (const std::string& check : spec.checks) {
        if (check == "moment-ode") {
          // Worst deviation from the reference curve in 3-SE units.
          const auto t = moments.column("t");
          const auto ev = moments.column("ev1sq");
          const auto se = moments.column("ev1sq_se");
          const auto ref = moments.column("ev1sq_ref");
          double worst = 0.0;
          for (std::size_t r = 0; r < t.size(); ++r) {
            if (t[r] <= 0.0) continue;
            const double dev = std::abs(ev[r] - ref[r]) /
                               std::max(3.0 * se[r], 1e-300);
            worst = std::max(worst, dev);
          }
          add_check(checks, "moment-ode", worst <= 1.0, worst, 1.0, "<=",
                    "max |E[V1^2] - reference| in 3*SE units over t > 0");
        } else if (check == "stationarity") {
          const Table& term = need(tables, "terminal");
          const auto v1 = term.column("v1");
          const KsResult ks = ks_test(v1, normal_cdf);
          add_check(checks, "stationarity", ks.p_value > 0.01, ks.p_value,
                    0.01, ">", "KS p-value of terminal V1 against N(0,1)");
        } else if (check == "radius-drift") {
          const auto t = moments.column("t");
          const auto drift = moments.column("drift_mean");
          const double horizon = t.back();
          const double per_unit =
              horizon > 0.0 ? std::abs(drift.back()) / horizon : 0.0;
          const double thresh = 1e-3 * static_cast<double>(spec.sim.dimension);
          add_check(checks, "radius-drift", per_unit < thresh, per_unit,
                    thresh, "<", "mean |V|^2 drift per unit time");
        }
      }
      break;
    }
    case ExperimentKind::couple: {
      const Table& msd = need(tables, "msd");
      const auto t = msd.column("t");
      const auto val = msd.column("msd");
      const auto se = msd.column("se");
      const auto bound = msd.column("bound");
      double worst = -HUGE_VAL;
      for (std::size_t r = 0; r < t.size(); ++r) {
        worst = std::max(worst, val[r] - bound[r] - 3.0 * se[r]);
      }
      add_check(checks, "bound-domination", worst <= 0.0, worst, 0.0, "<=",
                "max over grid of msd - bound - 3*SE");
      // Integrated tagged mean square against c^2 t + t^2/2.
      const auto ev = msd.column("ev1sq");
      const auto ev_se = msd.column("ev1sq_se");
      double c_sq = 0.0;
      for (double c : spec.initial) c_sq += c * c;
      double integral = 0.0, integral_se = 0.0, worst_int = -HUGE_VAL;
      for (std::size_t r = 1; r < t.size(); ++r) {
        const double dt = t[r] - t[r - 1];
        integral += 0.5 * (ev[r] + ev[r - 1]) * dt;
        integral_se += 0.5 * (ev_se[r] + ev_se[r - 1]) * dt;
        const double limit = c_sq * t[r] + 0.5 * t[r] * t[r];
        worst_int = std::max(worst_int,
                             integral - limit - 3.0 * integral_se);
      }
      add_check(checks, "integrated-moment", worst_int <= 0.0, worst_int, 0.0,
                "<=", "max of int E[V1^2] - (c^2 t + t^2/2) - 3*SE");
      break;
    }
    case ExperimentKind::chaos: {
      const Table& table = need(tables, "chaos");
      double score = 0.0;
      for (const auto& row : table.rows) {
        const double i = row[table.col("i")];
        const double j = row[table.col("j")];
        if (i == j) continue;
        score = std::max(score, std::abs(row[table.col("corr")]));
        score = std::max(score, std::abs(row[table.col("sq_corr")]));
      }
      const double threshold =
          spec.chaos_threshold_safety * 3.0 /
          std::sqrt(static_cast<double>(spec.sim.ensemble));
      add_check(checks, "independence-score", score < threshold, score,
                threshold, "<",
                "max off-diagonal |corr| over values and squares");
      break;
    }
    case ExperimentKind::kac: {
      const Table& stats = need(tables, "kac_stats");
      double max_drift = 0.0, min_p = 1.0, worst_angle = 0.0;
      for (const auto& row : stats.rows) {
        max_drift = std::max(max_drift, row[stats.col("max_energy_drift")]);
        min_p = std::min(min_p, row[stats.col("chi2_p")]);
        const double se = row[stats.col("angle_se")];
        if (se > 0.0) {
          worst_angle = std::max(
              worst_angle, std::abs(row[stats.col("angle_mean")]) / se);
        }
      }
      const double energy_tol =
          1e-12 * static_cast<double>(spec.jump.dimension);
      add_check(checks, "energy-exact", max_drift <= energy_tol, max_drift,
                energy_tol, "<=", "max | |V(T)|^2 - |V(0)|^2 | over events");
      add_check(checks, "pair-counts-chi2", min_p > 0.01, min_p, 0.01, ">",
                "min chi-square p-value over epsilons");
      add_check(checks, "angle-symmetry", worst_angle <= 3.0, worst_angle, 3.0,
                "<=", "max |mean angle| / SE over epsilons");
      if (tables.count("kac_limit")) {
        const Table& limit = need(tables, "kac_limit");
        const auto ks = limit.column("ks_distance");
        const auto se = limit.column("ks_se");
        double worst = -HUGE_VAL;
        for (std::size_t r = 1; r < ks.size(); ++r) {
          const double allowance =
              2.0 * std::sqrt(se[r] * se[r] + se[r - 1] * se[r - 1]);
          worst = std::max(worst, ks[r] - ks[r - 1] - allowance);
        }
        add_check(checks, "limit-monotone", worst <= 0.0, worst, 0.0, "<=",
                  "max increase of KS distance beyond 2*SE");
      }
      break;
    }
    case ExperimentKind::momentum: {
      const Table& cons = need(tables, "conservation");
      const double n = cons.rows.at(0)[cons.col("particles")];
      const double mom = cons.rows.at(0)[cons.col("max_momentum_residual")];
      const double en = cons.rows.at(0)[cons.col("max_energy_residual")];
      const double gs = cons.rows.at(0)[cons.col("gs_roundtrip_error")];
      add_check(checks, "momentum-conservation", mom <= 1e-12 * n, mom,
                1e-12 * n, "<=", "max per-step |sum dV| component");
      const double en_tol = spec.momentum.radius_tol * n * spec.momentum.e0;
      add_check(checks, "energy-conservation", en <= en_tol, en, en_tol, "<=",
                "max |total energy - N e0|");
      add_check(checks, "gs-roundtrip", gs <= 1e-12, gs, 1e-12, "<=",
                "max |inverse(forward(V)) - V|");
      if (tables.count("cross_cov")) {
        const Table& cc = need(tables, "cross_cov");
        double worst = 0.0;
        for (const auto& row : cc.rows) {
          const double se = row[cc.col("se")];
          if (se > 0.0) {
            worst = std::max(worst, std::abs(row[cc.col("cov")]) / se);
          }
        }
        add_check(checks, "cross-cov-zero", worst <= 3.0, worst, 3.0, "<=",
                  "max |cross covariance| / SE of the two tagged particles");
      }
      if (tables.count("compensated")) {
        const Table& comp = need(tables, "compensated");
        const auto t = comp.column("t");
        const auto val = comp.column("msd");
        const auto se = comp.column("se");
        const auto theory = comp.column("theory");
        double worst = 0.0;
        for (std::size_t r = 0; r < t.size(); ++r) {
          if (t[r] <= 0.0) continue;
          worst = std::max(worst, std::abs(val[r] - theory[r]) /
                                      std::max(3.0 * se[r], 1e-300));
        }
        add_check(checks, "compensated-noise", worst <= 1.0, worst, 1.0, "<=",
                  "max |msd - 3t/N| in 3*SE units");
      }
      break;
    }
    case ExperimentKind::marginal: {
      const Table& stats = need(tables, "marginal_stats");
      const auto& row = stats.rows.at(0);
      add_check(checks, "ks-marginal", row[stats.col("ks_p")] > 0.01,
                row[stats.col("ks_p")], 0.01, ">",
                "KS p-value of sphere coordinate samples vs nu_N");
      add_check(checks, "normalization",
                row[stats.col("norm_error")] < 1e-8,
                row[stats.col("norm_error")], 1e-8, "<",
                "|integral of nu_N - 1|");
      if (spec.marginal_compare_normal) {
        add_check(checks, "ks-normal", row[stats.col("ks_normal_p")] > 0.01,
                  row[stats.col("ks_normal_p")], 0.01, ">",
                  "KS p-value vs standard normal");
      }
      if (spec.marginal_lift_check) {
        add_check(checks, "lift-ks", row[stats.col("lift_ks_p")] > 0.01,
                  row[stats.col("lift_ks_p")], 0.01, ">",
                  "KS p-value of lifted samples vs nu_N");
      }
      break;
    }
    case ExperimentKind::covariation: {
      for (const std::string& rep : spec.cov_representations) {
        const Table& table = need(tables, "covariation_" + rep);
        double worst = 0.0;
        std::size_t used = 0;
        for (const auto& row : table.rows) {
          const double ref = row[table.col("sigma_mean")];
          if (std::abs(ref) < spec.cov_ref_floor) continue;
          ++used;
          worst = std::max(worst, std::abs(row[table.col("rate")] - ref) /
                                      std::abs(ref));
        }
        const bool pass = used > 0 && worst <= spec.cov_rel_tol;
        add_check(checks, "identity-5pct-" + rep, pass, worst,
                  spec.cov_rel_tol, "<=",
                  "max relative error of d<M_i,M_j>/dt vs sigma_ij, " +
                      std::to_string(used) + " cells above floor");
      }
      break;
    }
  }
  return checks;
}

// ---------------------------------------------------------------------------
// run_experiment

RunResult run_experiment(const ExperimentSpec& spec_in, bool with_checks) {
  ExperimentSpec spec = spec_in;
  const auto start = std::chrono::steady_clock::now();
  if (spec.dt_auto) {
    spec.sim.dt = calibrate_dt(spec.sim);
    spec.sim.validate();
  }

  ExperimentOutput output;
  switch (spec.kind) {
    case ExperimentKind::simulate: output = run_simulate(spec); break;
    case ExperimentKind::couple: output = run_couple(spec); break;
    case ExperimentKind::chaos: output = run_chaos(spec); break;
    case ExperimentKind::kac: output = run_kac(spec); break;
    case ExperimentKind::momentum: output = run_momentum(spec); break;
    case ExperimentKind::marginal: output = run_marginal(spec); break;
    case ExperimentKind::covariation: output = run_covariation(spec); break;
  }

  std::filesystem::create_directories(spec.out_dir);
  RunResult result;
  result.partial = output.partial;

  const char* ext = spec.format == OutputFormat::csv ? ".csv" : ".json";
  for (const auto& [name, table] : output.tables) {
    const std::string filename = name + ext;
    const std::string path = spec.out_dir + "/" + filename;
    if (spec.format == OutputFormat::csv) {
      write_csv(table, path);
    } else {
      json doc;
      doc["columns"] = table.columns;
      doc["rows"] = table.rows;
      std::ofstream out(path, std::ios::binary);
      if (!out) throw_runtime("cannot open '" + path + "'");
      out << doc.dump(2) << "\n";
    }
    result.outputs.push_back(filename);
  }

  if (!output.partial) {
    result.checks = evaluate_checks(spec, output.tables);
  }
  {
    json summary;
    summary["experiment"] = to_string(spec.kind);
    summary["partial"] = output.partial;
    json items = json::array();
    for (const auto& c : result.checks) {
      items.push_back({{"name", c.name},
                       {"pass", c.pass},
                       {"value", c.value},
                       {"threshold", c.threshold},
                       {"comparator", c.comparator},
                       {"details", c.details}});
    }
    summary["checks"] = items;
    std::ofstream out(spec.out_dir + "/summary.json", std::ios::binary);
    if (!out) throw_runtime("cannot write summary.json");
    out << summary.dump(2) << "\n";
    result.outputs.push_back("summary.json");
  }

  const auto stop = std::chrono::steady_clock::now();
  {
    json manifest;
    manifest["artifact"] = "spherelab";
    manifest["version"] = kVersion;
    manifest["experiment"] = to_string(spec.kind);
    manifest["config"] = json::parse(resolved_config_json(spec));
    manifest["outputs"] = result.outputs;
    manifest["partial"] = output.partial;
    manifest["wall_time_s"] =
        std::chrono::duration<double>(stop - start).count();
    std::ofstream out(spec.out_dir + "/manifest.json", std::ios::binary);
    if (!out) throw_runtime("cannot write manifest.json");
    out << manifest.dump(2) << "\n";
  }
  result.manifest_path = spec.out_dir + "/manifest.json";

  if (output.partial) {
    result.exit_code = 3;
  } else if (with_checks) {
    for (const auto& c : result.checks) {
      if (!c.pass) result.exit_code = 4;
    }
  }
  return result;
}

}  // namespace spherelab
