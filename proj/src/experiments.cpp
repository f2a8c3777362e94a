#include "sotlab/experiments.hpp"

#include "sotlab/coupling.hpp"
#include "sotlab/kernels.hpp"
#include "sotlab/parallel.hpp"
#include "sotlab/rng.hpp"
#include "sotlab/sde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace sotlab {
namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* pattern, double x) {
  char buffer[128];
  std::snprintf(buffer, sizeof buffer, pattern, x);
  return buffer;
}

nlohmann::json config_json(const ExperimentConfig& config) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, value] : config_entries(config)) out[key] = value;
  return out;
}

ScenarioReport start_report(const std::string& name, const ExperimentConfig& config) {
  ScenarioReport report;
  report.scenario = name;
  report.metadata["config"] = config_json(config);
  report.metadata["seed"] = config.seed;
  return report;
}

void finish(ScenarioReport& report, Clock::time_point started) {
  report.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - started).count();
}

Verdict at_most(std::string id, std::string description, double measured, double threshold) {
  return {std::move(id), std::move(description), measured, threshold, measured <= threshold};
}

Verdict at_least(std::string id, std::string description, double measured, double threshold) {
  return {std::move(id), std::move(description), measured, threshold, measured >= threshold};
}

bool strictly_decreasing(const std::vector<double>& xs) {
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] < xs[i - 1])) return false;
  return true;
}

SampledPath stack_state(const CouplingResult& r) {
  Mat z(2 * r.Xm.dim(), static_cast<Eigen::Index>(r.Xm.size()));
  z.topRows(r.Xm.dim()) = r.Xm.values();
  z.bottomRows(r.Ym.dim()) = r.Ym.values();
  return SampledPath(r.Xm.grid(), std::move(z));
}

// Per-path outputs of the zero-mass study, indexed [m][t0].
struct PathRecord {
  double v0 = 0.0;
  double v0_fine = 0.0;
  double cost_fine = 0.0;
  std::vector<double> cost, gap, abs_y0, y0_moment;
  std::vector<std::vector<double>> dev_x, dev_y;
};

Vec initial_momentum(const ExperimentConfig& config, const WarpedSamples& ws, const KernelParams& params,
                     std::uint64_t path) {
  const Eigen::Index d = ws.x.rows();
  if (config.y0_law == "matched") return (ws.x.col(0) - ws.x0) / kernel_K(params, 1.0);
  if (config.y0_law == "zero") return Vec::Zero(d);
  // sqrt(m) Z with the same Z for every m of one path
  RandomStream rng(config.seed, path, Stream::kMomentum);
  Vec z(d);
  for (Eigen::Index c = 0; c < d; ++c) z(c) = rng.normal();
  return std::sqrt(params.m()) * z;
}

}  // namespace

Eigen::Index sample_index(const Vec& weights, double uniform) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    acc += weights(i);
    if (uniform < acc) return i;
  }
  return weights.size() - 1;
}

ZeroMassSummary zero_mass_study(const ExperimentConfig& config, bool beta_variant) {
  config.validate();
  const EmpiricalMeasure p0 = config.p0.resolve(config.support_size);
  const EmpiricalMeasure p1 = config.p1.resolve(config.support_size);
  if (p0.dim() != p1.dim()) throw ConfigError("p0 and p1 differ in dimension");
  const Eigen::Index d = p0.dim();
  const CostFunction cost = config.make_cost();

  ZeroMassSummary summary{};
  summary.potentials = sinkhorn(p0, p1, config.gamma, config.sinkhorn_tol, config.sinkhorn_max_iter);
  const SinkhornPotentials& pot = summary.potentials;

  std::vector<KernelParams> params;
  for (double m : config.m_grid) params.emplace_back(m, config.gamma);
  const std::size_t n_m = params.size(), n_t0 = config.t0_list.size();
  const TimeGrid eval = TimeGrid::uniform(config.grid);
  const TimeGrid eval_fine = TimeGrid::uniform(2 * config.grid);
  const TimeGrid joint = warped_union_grid(eval, params);
  const TimeGrid joint_fine = warped_union_grid(eval_fine, {params.back()});
  std::vector<std::size_t> eval_at(eval.size());
  for (std::size_t k = 0; k < eval.size(); ++k) eval_at[k] = joint.find(eval[k]);
  std::vector<std::size_t> t0_last(n_t0);
  for (std::size_t q = 0; q < n_t0; ++q)
    t0_last[q] = static_cast<std::size_t>(std::upper_bound(eval.nodes().begin(), eval.nodes().end(), config.t0_list[q]) -
                                          eval.nodes().begin());

  const SDEConfig sde = SDEConfig::identity(params.front(), d);
  const DriftField drift = [&pot](double t, const Vec& x, const Vec&) { return bridge_drift_m0(pot, t, x); };

  std::vector<PathRecord> records(config.paths);
  parallel_for(config.paths, config.threads, [&](std::size_t i) {
    PathRecord& rec = records[i];
    RandomStream init(config.seed, i, Stream::kInitial);
    const Vec x0 = p0.point(sample_index(p0.weights(), init.uniform()));
    const Trajectory traj = simulate_overdamped(sde, drift, x0, joint, config.seed, i);
    rec.v0 = action(SampledPath(joint, traj.u), SampledPath(joint, traj.X), cost);
    for (std::size_t j = 0; j < n_m; ++j) {
      const WarpedSamples ws = sample_warped(traj, params[j], eval);
      const double k1 = kernel_K(params[j], 1.0);
      const CouplingResult r = beta_variant ? build_zm_beta(ws, initial_momentum(config, ws, params[j], i), params[j])
                                            : build_zm(ws, params[j]);
      rec.cost.push_back(action(r.control, stack_state(r), cost));
      rec.gap.push_back(r.terminal_gap);
      rec.abs_y0.push_back(((ws.x.col(0) - ws.x0) / k1).norm());
      rec.y0_moment.push_back(norm_power(r.y0, cost.r0()));
      std::vector<double> dx(n_t0, 0.0), dy(n_t0, 0.0);
      for (std::size_t q = 0; q < n_t0; ++q)
        for (std::size_t k = 0; k < t0_last[q]; ++k) {
          const auto kk = static_cast<Eigen::Index>(k);
          dx[q] = std::max(dx[q], (r.Xm.values().col(kk) - traj.X.col(static_cast<Eigen::Index>(eval_at[k]))).norm());
          dy[q] = std::max(dy[q], r.Ym.values().col(kk).norm());
        }
      rec.dev_x.push_back(std::move(dx));
      rec.dev_y.push_back(std::move(dy));
    }
    // Same path index on the doubled grid, for the discretization margin at the smallest m.
    const Trajectory fine = simulate_overdamped(sde, drift, x0, joint_fine, config.seed, i);
    rec.v0_fine = action(SampledPath(joint_fine, fine.u), SampledPath(joint_fine, fine.X), cost);
    const WarpedSamples ws = sample_warped(fine, params.back(), eval_fine);
    const CouplingResult r = beta_variant
                                 ? build_zm_beta(ws, initial_momentum(config, ws, params.back(), i), params.back())
                                 : build_zm(ws, params.back());
    rec.cost_fine = action(r.control, stack_state(r), cost);
  });

  std::vector<double> v0s, v0_fine, cost_fine;
  for (const auto& rec : records) {
    v0s.push_back(rec.v0);
    v0_fine.push_back(rec.v0_fine);
    cost_fine.push_back(rec.cost_fine);
  }
  const auto v0 = mc_value(v0s);
  summary.v0_mean = v0.mean;
  summary.v0_stderr = v0.stderr;

  for (std::size_t j = 0; j < n_m; ++j) {
    ConvergenceRow row{};
    row.m = params[j].m();
    std::vector<double> costs, abs_y0, moments;
    row.sup_dev_X.assign(n_t0, 0.0);
    row.sup_dev_Y.assign(n_t0, 0.0);
    for (const auto& rec : records) {
      costs.push_back(rec.cost[j]);
      abs_y0.push_back(rec.abs_y0[j]);
      moments.push_back(rec.y0_moment[j]);
      row.terminal_gap_max = std::max(row.terminal_gap_max, rec.gap[j]);
      for (std::size_t q = 0; q < n_t0; ++q) {
        row.sup_dev_X[q] += rec.dev_x[j][q] / static_cast<double>(records.size());
        row.sup_dev_Y[q] += rec.dev_y[j][q] / static_cast<double>(records.size());
      }
    }
    const auto c = mc_value(costs);
    const auto y = mc_value(abs_y0);
    row.cost_mean = c.mean;
    row.cost_stderr = c.stderr;
    row.mean_abs_Y0 = y.mean;
    row.mean_abs_Y0_stderr = y.stderr;
    row.y0_moment = mc_value(moments).mean;
    row.momentum_bound_C = momentum_bound(params[j], summary.v0_mean + 1.0,
                                          [&cost](double r) { return cost.c1_lower(r); }, d);
    summary.rows.push_back(std::move(row));
  }
  summary.discretization_margin = std::abs(summary.rows.back().cost_mean - mc_value(cost_fine).mean) +
                                  std::abs(summary.v0_mean - mc_value(v0_fine).mean);

  std::size_t mono_x = 0, mono_y = 0;
  const std::size_t q = n_t0 - 1;
  for (const auto& rec : records) {
    bool ok_x = true, ok_y = true;
    for (std::size_t j = 1; j < n_m; ++j) {
      ok_x = ok_x && rec.dev_x[j][q] < rec.dev_x[j - 1][q];
      ok_y = ok_y && rec.dev_y[j][q] < rec.dev_y[j - 1][q];
    }
    mono_x += ok_x;
    mono_y += ok_y;
  }
  summary.monotone_fraction_X = static_cast<double>(mono_x) / static_cast<double>(records.size());
  summary.monotone_fraction_Y = static_cast<double>(mono_y) / static_cast<double>(records.size());
  return summary;
}

namespace {

ScenarioReport zero_mass_report(const ExperimentConfig& config, bool beta_variant) {
  const auto started = Clock::now();
  const std::string name = beta_variant ? "zero_mass_beta" : "zero_mass";
  const std::string tag = beta_variant ? "ZMB" : "ZM";
  ScenarioReport report = start_report(name, config);
  const ZeroMassSummary s = zero_mass_study(config, beta_variant);
  const double k = config.sigma_multiplier;
  const std::string t0_label = fmt("%g", config.t0_list.back());

  Table rows{"rows",
             {"m", "cost_mean", "cost_stderr", "sup_dev_X", "sup_dev_Y", "terminal_gap_max", "mean_abs_Y0",
              "momentum_bound_C", "mean_abs_Y0_stderr", "y0_moment"},
             {}};
  for (double t0 : config.t0_list) {
    rows.header.push_back("sup_dev_X_t" + fmt("%g", t0));
    rows.header.push_back("sup_dev_Y_t" + fmt("%g", t0));
  }
  for (const auto& r : s.rows) {
    std::vector<double> line{r.m, r.cost_mean, r.cost_stderr, r.sup_dev_X.back(), r.sup_dev_Y.back(),
                             r.terminal_gap_max, r.mean_abs_Y0, r.momentum_bound_C, r.mean_abs_Y0_stderr, r.y0_moment};
    for (std::size_t q = 0; q < config.t0_list.size(); ++q) {
      line.push_back(r.sup_dev_X[q]);
      line.push_back(r.sup_dev_Y[q]);
    }
    rows.rows.push_back(std::move(line));
  }
  report.tables.push_back(std::move(rows));
  report.tables.push_back({"summary",
                           {"v0_mean", "v0_stderr", "discretization_margin", "monotone_fraction_X",
                            "monotone_fraction_Y", "sinkhorn_residual", "sinkhorn_iterations"},
                           {{s.v0_mean, s.v0_stderr, s.discretization_margin, s.monotone_fraction_X,
                             s.monotone_fraction_Y, s.potentials.residual,
                             static_cast<double>(s.potentials.iterations)}}});

  double gap = 0.0;
  for (const auto& r : s.rows) gap = std::max(gap, r.terminal_gap_max);
  report.verdicts.push_back(at_most(tag + ".terminal_gap", "max over m and paths of |X^m(1) - X(1)|", gap,
                                    config.terminal_gap_tol));
  report.verdicts.push_back(at_least(tag + ".monotone_X", "fraction of paths with sup_{t<=" + t0_label +
                                                              "}|X^m - X| strictly decreasing along the m-grid",
                                     s.monotone_fraction_X, config.monotone_fraction));
  report.verdicts.push_back(at_least(tag + ".monotone_Y", "fraction of paths with sup_{t<=" + t0_label +
                                                              "}|Y^m| strictly decreasing along the m-grid",
                                     s.monotone_fraction_Y, config.monotone_fraction));
  for (std::size_t q = 0; q < config.t0_list.size(); ++q) {
    std::vector<double> mx, my;
    for (const auto& r : s.rows) {
      mx.push_back(r.sup_dev_X[q]);
      my.push_back(r.sup_dev_Y[q]);
    }
    const std::string t = fmt("%g", config.t0_list[q]);
    report.verdicts.push_back({tag + ".mean_dev_decreasing_t" + t,
                               "mean sup deviations of X^m and Y^m on [0," + t + "] decrease along the m-grid",
                               static_cast<double>(strictly_decreasing(mx) && strictly_decreasing(my)), 1.0,
                               strictly_decreasing(mx) && strictly_decreasing(my)});
  }
  const auto& last = s.rows.back();
  const double combined = std::hypot(last.cost_stderr, s.v0_stderr);
  const double allowance = s.v0_mean + k * combined + s.discretization_margin;
  report.verdicts.push_back(at_most(tag + ".cost_upper", "cost(m_min) <= V0_hat + 3 combined stderr + discretization margin (one-sided)",
                                    last.cost_mean, allowance));
  double worst = -kInfinity;
  for (const auto& r : s.rows) worst = std::max(worst, r.mean_abs_Y0 - k * r.mean_abs_Y0_stderr - r.momentum_bound_C);
  report.verdicts.push_back(at_most(tag + ".momentum_admissible",
                                    "max over rows of mean|Y^m(0)| - 3 stderr - C(m,P0,P1)", worst, 0.0));
  std::vector<double> bounds;
  for (const auto& r : s.rows) bounds.push_back(r.momentum_bound_C);
  report.verdicts.push_back({tag + ".bound_decreasing", "C(m,P0,P1) strictly decreasing along the m-grid",
                             static_cast<double>(strictly_decreasing(bounds)), 1.0, strictly_decreasing(bounds)});
  if (beta_variant && config.y0_law == "sqrt_m_gaussian") {
    std::vector<double> moments;
    for (const auto& r : s.rows) moments.push_back(r.y0_moment);
    report.verdicts.push_back({tag + ".y0_moment_decreasing", "E|Y^m(0)|^r0 strictly decreasing along the m-grid",
                               static_cast<double>(strictly_decreasing(moments)), 1.0, strictly_decreasing(moments)});
  }
  report.metadata["v0_mean"] = s.v0_mean;
  report.metadata["v0_stderr"] = s.v0_stderr;
  report.metadata["discretization_margin"] = s.discretization_margin;
  report.metadata["sinkhorn_iterations"] = s.potentials.iterations;
  report.metadata["sinkhorn_residual"] = s.potentials.residual;
  report.metadata["note"] = "cost_upper is a one-sided check; no constructive lower bound is available";
  finish(report, started);
  return report;
}

}  // namespace

ScenarioReport run_zero_mass(const ExperimentConfig& config) { return zero_mass_report(config, false); }
ScenarioReport run_zero_mass_beta(const ExperimentConfig& config) { return zero_mass_report(config, true); }

ScenarioReport run_kernels_check(const ExperimentConfig& config) {
  const auto started = Clock::now();
  ScenarioReport report = start_report("kernels_check", config);
  double identity = 0.0, sandwich = -kInfinity, contraction = -kInfinity, self_test = 0.0;
  RandomStream rng(config.seed, 0, Stream::kSampling);
  const TimeGrid grid = TimeGrid::uniform(63);
  for (int trial = 0; trial < 100; ++trial) {
    const KernelParams p(std::exp(std::log(1e-3) + rng.uniform() * std::log(1e3)), 0.1 + 4.9 * rng.uniform());
    const SampledPath ones(grid, Mat::Ones(1, 64));
    const SampledPath psi = psi_operator(p, ones);
    for (std::size_t k = 0; k < grid.size(); ++k)
      identity = std::max(identity, std::abs(psi.values()(0, static_cast<Eigen::Index>(k)) - p.gamma() * kernel_K(p, grid[k])));
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const KernelParams p(std::exp(std::log(1e-4) + rng.uniform() * std::log(1e4)), 0.1 + 4.9 * rng.uniform());
    const double t = rng.uniform();
    const double gap = kernel_phi(p, t) - t;
    sandwich = std::max({sandwich, -gap, gap - 2.0 * p.m() / p.gamma()});
    Mat values(1, 64);
    for (Eigen::Index k = 0; k < 64; ++k) values(0, k) = 4.0 * rng.uniform() - 2.0;
    const SampledPath f(grid, values);
    contraction = std::max(contraction, psi_operator(p, f).sup_norm() - f.sup_norm());
  }
  {
    const KernelParams p(0.05, config.gamma);
    const TimeGrid interior = TimeGrid(std::vector<double>(grid.nodes().begin(), grid.nodes().end() - 1));
    const SampledPath psi = psi_weighted(p, SampledPath(interior, Mat::Ones(1, static_cast<Eigen::Index>(interior.size()))));
    for (std::size_t k = 0; k < interior.size(); ++k)
      self_test = std::max(self_test, std::abs(kernel_f(p, interior[k]) * psi.values()(0, static_cast<Eigen::Index>(k)) -
                                               kernel_K(p, interior[k]) / kernel_K(p, 1.0)));
  }
  report.verdicts.push_back(at_most("K.psi_unit", "max |Psi(1)(t_k) - gamma K(t_k)| over 100 random (gamma, m)", identity, 1e-12));
  report.verdicts.push_back(at_most("K.phi_sandwich", "max violation of 0 <= phi(t) - t <= 2m/gamma over 1e3 triples", sandwich, 0.0));
  report.verdicts.push_back(at_most("K.contraction", "max of |Psi f|_inf - |f|_inf over 1e3 random paths", contraction, 0.0));
  report.verdicts.push_back(at_most("K.weighted_self_test", "max |f Psi(1/f^2) - K/K(1)|", self_test, 1e-10));
  finish(report, started);
  return report;
}

ScenarioReport run_bridge_solve(const ExperimentConfig& config) {
  const auto started = Clock::now();
  config.validate();
  ScenarioReport report = start_report("bridge_solve", config);
  const EmpiricalMeasure p0 = config.p0.resolve(config.support_size);
  const EmpiricalMeasure p1 = config.p1.resolve(config.support_size);
  const SinkhornPotentials pot = sinkhorn(p0, p1, config.gamma, config.sinkhorn_tol, config.sinkhorn_max_iter);
  Table source{"source_potentials", {}, {}}, target{"target_potentials", {}, {}};
  for (Eigen::Index c = 0; c < p0.dim(); ++c) {
    source.header.push_back("x_" + std::to_string(c + 1));
    target.header.push_back("y_" + std::to_string(c + 1));
  }
  source.header.insert(source.header.end(), {"weight", "potential"});
  target.header.insert(target.header.end(), {"weight", "potential"});
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    std::vector<double> row(p0.point(i).data(), p0.point(i).data() + p0.dim());
    row.push_back(p0.weight(i));
    row.push_back(pot.source_potentials(i));
    source.rows.push_back(std::move(row));
  }
  for (Eigen::Index j = 0; j < p1.size(); ++j) {
    std::vector<double> row(p1.point(j).data(), p1.point(j).data() + p1.dim());
    row.push_back(p1.weight(j));
    row.push_back(pot.target_potentials(j));
    target.rows.push_back(std::move(row));
  }
  report.tables.push_back(std::move(source));
  report.tables.push_back(std::move(target));
  report.metadata["gamma"] = config.gamma;
  report.metadata["tol"] = config.sinkhorn_tol;
  report.metadata["residual"] = pot.residual;
  report.metadata["iterations"] = pot.iterations;
  report.verdicts.push_back(at_most("B.sinkhorn_residual", "L1 marginal residual of the Sinkhorn plan", pot.residual,
                                    config.sinkhorn_tol));
  finish(report, started);
  return report;
}

ScenarioReport run_marginal_check(const ExperimentConfig& config) {
  const auto started = Clock::now();
  config.validate();
  ScenarioReport report = start_report("marginal", config);
  const EmpiricalMeasure p0 = config.p0.resolve(config.support_size);
  const EmpiricalMeasure p1 = config.p1.resolve(config.support_size);
  const SinkhornPotentials pot = sinkhorn(p0, p1, config.gamma, config.sinkhorn_tol, config.sinkhorn_max_iter);
  const Eigen::Index d = p0.dim();
  const KernelParams small(config.m_grid.back(), config.gamma);
  const TimeGrid eval = TimeGrid::uniform(config.grid);
  const TimeGrid joint = warped_union_grid(eval, {small});
  const SDEConfig sde = SDEConfig::identity(small, d);
  const DriftField drift = [&pot](double t, const Vec& x, const Vec&) { return bridge_drift_m0(pot, t, x); };
  Mat terminal(d, static_cast<Eigen::Index>(config.paths));
  std::vector<double> coupled_gap(config.paths, 0.0);
  parallel_for(config.paths, config.threads, [&](std::size_t i) {
    RandomStream init(config.seed, i, Stream::kInitial);
    const Vec x0 = p0.point(sample_index(p0.weights(), init.uniform()));
    const Trajectory traj = simulate_overdamped(sde, drift, x0, joint, config.seed, i);
    const auto last = static_cast<Eigen::Index>(joint.size()) - 1;
    terminal.col(static_cast<Eigen::Index>(i)) = traj.X.col(last);
    const CouplingResult r = build_zm(traj, small, eval);
    coupled_gap[i] = (r.Xm.values().col(static_cast<Eigen::Index>(eval.size()) - 1) - traj.X.col(last)).norm();
  });
  const EmpiricalMeasure simulated = EmpiricalMeasure::uniform(terminal);
  const double energy = energy_distance(simulated, p1);
  report.verdicts.push_back(at_most("M.sinkhorn_residual", "Sinkhorn L1 marginal residual", pot.residual, config.sinkhorn_tol));
  report.verdicts.push_back(at_most("M.energy", "energy distance between simulated X(1) and P1", energy, config.energy_threshold));
  double w2 = std::numeric_limits<double>::quiet_NaN();
  if (d == 1) {
    w2 = wasserstein2_squared_1d(simulated, p1);
    report.verdicts.push_back(at_most("M.w2", "squared W2 between simulated X(1) and P1", w2, config.w2_threshold));
  }
  const double gap = *std::max_element(coupled_gap.begin(), coupled_gap.end());
  report.verdicts.push_back(at_most("M.coupled_terminal", "max |X^m(1) - X(1)| on the same samples", gap, 0.0));
  report.tables.push_back({"distances", {"energy_distance", "w2_squared", "sinkhorn_residual"}, {{energy, w2, pot.residual}}});
  finish(report, started);
  return report;
}

ScenarioReport run_duality(const ExperimentConfig& config) {
  const auto started = Clock::now();
  config.validate();
  ScenarioReport report = start_report("duality", config);
  const EmpiricalMeasure p0 = config.p0.resolve(config.support_size);
  const EmpiricalMeasure p0_alt = config.duality_p0_alt.resolve(config.support_size);
  const Eigen::Index d = p0.dim();
  const KernelParams params(config.duality_m, config.gamma);
  const TerminalReward reward = TerminalReward::from_name(config.reward, config.reward_amplitude, d);
  const double k = config.sigma_multiplier;

  // HJB gate on psi before any simulation.
  double worst = 0.0;
  RandomStream gate_rng(config.seed, 0, Stream::kSampling);
  for (std::size_t s = 0; s < config.hjb_points; ++s) {
    const double t = 0.1 + 0.8 * gate_rng.uniform();
    Vec x(d), y(d);
    for (Eigen::Index c = 0; c < d; ++c) {
      x(c) = 4.0 * gate_rng.uniform() - 2.0;
      y(c) = 4.0 * gate_rng.uniform() - 2.0;
    }
    worst = std::max(worst, std::abs(hjb_residual_psi(reward, params, t, x, y, config.hjb_h)));
  }
  const double gate_threshold = config.hjb_constant * config.hjb_h * config.hjb_h;
  report.verdicts.push_back(at_most("D.hjb_gate", "max |HJB residual of psi| at random interior points", worst, gate_threshold));
  if (worst > gate_threshold) {
    finish(report, started);
    return report;
  }

  const TimeGrid grid = TimeGrid::uniform(config.duality_grid);
  const SDEConfig sde = SDEConfig::identity(params, d);
  const DriftField optimal = [&](double t, const Vec& x, const Vec& y) {
    return optimal_control_m(reward, params, t, x, y);
  };
  const double scale = config.control_scale;
  const DriftField scaled = [&](double t, const Vec& x, const Vec& y) { return (scale * optimal(t, x, y)).eval(); };
  const double k1 = kernel_K(params, 1.0);
  Vec y_star = Vec::Constant(d, config.y_star);

  // Returns per-path (value, psi(0, Z(0))) for initial law and momentum rule.
  auto batch = [&](const EmpiricalMeasure& law, bool matched, const DriftField& control) {
    std::vector<double> value(config.duality_paths), start(config.duality_paths);
    parallel_for(config.duality_paths, config.threads, [&](std::size_t i) {
      RandomStream init(config.seed, i, Stream::kInitial);
      const Vec x0 = law.point(sample_index(law.weights(), init.uniform()));
      const Vec y0 = matched ? ((y_star - x0) / k1).eval() : Vec::Zero(d).eval();
      const Trajectory z = simulate_underdamped_exact(sde, control, x0, y0, grid, config.seed, i);
      double running = 0.0;
      for (std::size_t s = 0; s + 1 < grid.size(); ++s)
        running += 0.5 * grid.step(s) * z.u.col(static_cast<Eigen::Index>(s)).squaredNorm();
      value[i] = reward(z.X.col(static_cast<Eigen::Index>(grid.size()) - 1)) - running;
      start[i] = psi_m_value(reward, params, 0.0, x0, y0);
    });
    return std::make_pair(value, start);
  };

  const auto [opt_value, opt_start] = batch(p0, false, optimal);
  std::vector<double> diff(opt_value.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = opt_value[i] - opt_start[i];
  const auto primal = mc_value(opt_value), dual = mc_value(opt_start), paired = mc_value(diff);
  const double z_equality = std::abs(paired.mean) / std::max(paired.stderr, 1e-300);
  report.verdicts.push_back(at_most("D.equality", "|E[f(X1) - int |u|^2/2] - E[psi(0,Z0)]| in paired stderr units",
                                    z_equality, k));

  const auto [b1, b1_start] = batch(p0, true, optimal);
  const auto [b2, b2_start] = batch(p0_alt, true, optimal);
  const auto e1 = mc_value(b1), e2 = mc_value(b2);
  const double target = phi_value(reward, config.gamma, kernel_phi(params, 0.0), y_star);
  const double z_agree = std::abs(e1.mean - e2.mean) / std::max(std::hypot(e1.stderr, e2.stderr), 1e-300);
  const double z_match = std::max(std::abs(e1.mean - target) / std::max(e1.stderr, 1e-300),
                                  std::abs(e2.mean - target) / std::max(e2.stderr, 1e-300));
  report.verdicts.push_back(at_most("D.p0_independence", "two P0 with y*-matched momentum agree (stderr units)", z_agree, k));
  report.verdicts.push_back(at_most("D.phi_match", "both estimates match phi(phi^m(0), y*) (stderr units)", z_match, k));

  const auto [sub_value, sub_start] = batch(p0, false, scaled);
  std::vector<double> gain(opt_value.size());
  for (std::size_t i = 0; i < gain.size(); ++i) gain[i] = opt_value[i] - sub_value[i];
  const auto g = mc_value(gain);
  const double z_gain = g.mean / std::max(g.stderr, 1e-300);
  report.verdicts.push_back(at_least("D.suboptimal_lower", "scaled control scores lower (paired stderr units)", z_gain, k));

  report.tables.push_back({"estimates",
                           {"primal_mean", "primal_stderr", "dual_mean", "dual_stderr", "paired_mean", "paired_stderr",
                            "p0_mean", "p0_stderr", "p0_alt_mean", "p0_alt_stderr", "phi_target", "suboptimal_mean",
                            "gain_mean", "gain_stderr", "hjb_max_residual"},
                           {{primal.mean, primal.stderr, dual.mean, dual.stderr, paired.mean, paired.stderr, e1.mean,
                             e1.stderr, e2.mean, e2.stderr, target, mc_value(sub_value).mean, g.mean, g.stderr, worst}}});
  finish(report, started);
  return report;
}

ScenarioReport run_deterministic(const ExperimentConfig& config) {
  const auto started = Clock::now();
  ScenarioReport report = start_report("deterministic", config);
  RandomStream rng(config.seed, 0, Stream::kSampling);
  Table table{"identity", {"m", "gamma", "lhs", "rhs", "abs_diff"}, {}};
  double worst = 0.0;
  for (std::size_t n = 0; n < config.identity_paths; ++n) {
    const KernelParams p(0.01 + rng.uniform(), 0.5 + 1.5 * rng.uniform());
    PolynomialPath path{Mat(1, 4)};
    for (Eigen::Index c = 0; c < 4; ++c) path.coefficients(0, c) = 2.0 * rng.uniform() - 1.0;
    const auto id = deterministic_identity_check(path, p);
    worst = std::max(worst, std::abs(id.lhs - id.rhs()));
    table.rows.push_back({p.m(), p.gamma(), id.lhs, id.rhs(), std::abs(id.lhs - id.rhs())});
  }
  const KernelParams p(0.1, config.gamma);
  Vec dx(1);
  dx(0) = 0.75;
  PolynomialPath line{Mat(1, 2)};
  line.coefficients(0, 0) = -0.3;
  line.coefficients(0, 1) = dx(0);
  const auto id = deterministic_identity_check(line, p);
  const double expected = p.gamma() * p.gamma() * dx.squaredNorm();
  report.verdicts.push_back(at_most("DET.cubic", "max |lhs - rhs| over random cubic paths", worst, config.identity_tol));
  report.verdicts.push_back(at_most("DET.line", "|lhs - gamma^2 |dx|^2| + |boundary| + |acceleration| for a straight line",
                                    std::abs(id.lhs - expected) + std::abs(id.boundary) + std::abs(id.acceleration), 0.0));
  report.tables.push_back(std::move(table));
  finish(report, started);
  return report;
}

ScenarioReport run_assumptions(const ExperimentConfig& config) {
  const auto started = Clock::now();
  config.validate();
  ScenarioReport report = start_report("assumptions", config);
  const CostFunction cost = config.make_cost();
  SamplingSpec spec;
  spec.samples = config.assumption_samples;
  spec.seed = config.seed;
  spec.u_radius = config.u_radius;
  const std::vector<double> radii{0.1, 1.0, 10.0, 100.0};
  const std::vector<std::pair<double, double>> eps{{config.eps0, kInfinity}, {0.1, 0.1}, {0.01, 0.01}};
  const AssumptionReport r = check_assumptions(cost, spec, radii, eps);
  Table table{"constants", {"R", "C1", "C2", "C_r0"}, {}};
  for (std::size_t i = 0; i < radii.size(); ++i) table.rows.push_back({radii[i], r.c1[i], r.c2[i], r.c_r0[i]});
  report.tables.push_back(std::move(table));
  Table margins{"margins",
                {"homogeneity_margin", "homogeneity_violations", "growth_margin", "growth_constant", "growth_violations",
                 "convexity_margin", "convex", "samples", "u_radius"},
                {{r.homogeneity_margin, static_cast<double>(r.homogeneity_violations), r.growth_margin,
                  r.growth_constant, static_cast<double>(r.growth_violations), r.convexity_margin,
                  static_cast<double>(r.convex), static_cast<double>(r.samples), r.u_radius}}};
  report.tables.push_back(std::move(margins));
  Table delta{"delta_L", {"eps1", "eps2", "value"}, {}};
  for (const auto& e : r.delta_l) delta.rows.push_back({e.eps1, std::isinf(e.eps2) ? -1.0 : e.eps2, e.value});
  report.tables.push_back(std::move(delta));

  if (cost.kind() == CostKind::kQuadratic && cost.potential().name() == "zero") {
    double c2_dev = 0.0;
    for (double c2 : r.c2) c2_dev = std::max(c2_dev, std::abs(c2 - 0.5));
    report.verdicts.push_back(at_most("A.c2_exact", "max |C_{2,R} - 1/2| over the R-grid", c2_dev, 0.0));
  }
  report.verdicts.push_back(at_most("A.homogeneity", "homogeneity violations (margin < -1e-12)",
                                    static_cast<double>(r.homogeneity_violations), 0.0));
  report.verdicts.push_back(at_most("A.growth", "growth-inequality violations (margin < -1e-12)",
                                    static_cast<double>(r.growth_violations), 0.0));
  const AssumptionReport probe = check_assumptions(CostFunction::nonconvex_probe(config.probe_exponent), spec, radii, eps);
  report.verdicts.push_back(at_most("A.probe_nonconvex", "midpoint-convexity margin of |u|^2 - |u|^p + 1 is negative",
                                    probe.convexity_margin, -kViolationTolerance));
  report.metadata["probe_convexity_margin"] = probe.convexity_margin;
  report.metadata["cost_kind"] = cost.kind_name();
  finish(report, started);
  return report;
}

ScenarioReport run_scenario(const std::string& name, const ExperimentConfig& config) {
  if (name == "zero_mass") return run_zero_mass(config);
  if (name == "zero_mass_beta") return run_zero_mass_beta(config);
  if (name == "duality") return run_duality(config);
  if (name == "marginal") return run_marginal_check(config);
  if (name == "deterministic") return run_deterministic(config);
  if (name == "assumptions") return run_assumptions(config);
  if (name == "kernels_check") return run_kernels_check(config);
  if (name == "bridge_solve") return run_bridge_solve(config);
  throw ConfigError("unknown scenario '" + name + "'");
}

}  // namespace sotlab
