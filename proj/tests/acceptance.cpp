// Acceptance suite: one line per criterion, exit status 0 only when every criterion passes.

#include "sotlab/bridge.hpp"
#include "sotlab/costs.hpp"
#include "sotlab/experiments.hpp"
#include "sotlab/kernels.hpp"
#include "sotlab/rng.hpp"
#include "sotlab/sde.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace sotlab;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-3); }

EmpiricalMeasure random_measure(RandomStream& rng, Eigen::Index n, Eigen::Index d) {
  Mat pts(d, n);
  Vec w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < d; ++c) pts(c, i) = 2.0 * rng.normal();
    w(i) = 0.1 + rng.uniform();
  }
  return EmpiricalMeasure(pts, w / w.sum());
}

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// Verdicts of a scenario whose rule id starts with one of the prefixes.
Outcome from_report(const ScenarioReport& report, const std::vector<std::string>& ids) {
  bool pass = true;
  std::ostringstream detail;
  for (const Verdict& v : report.verdicts) {
    const bool wanted = std::any_of(ids.begin(), ids.end(), [&](const std::string& id) { return v.rule_id.rfind(id, 0) == 0; });
    if (!wanted) continue;
    pass &= v.pass;
    detail << v.rule_id << (v.pass ? "=ok(" : "=FAIL(") << v.measured << " vs " << v.threshold << ") ";
  }
  return {pass, detail.str()};
}

Outcome kernel_identities() {
  RandomStream rng(101, 0);
  const TimeGrid grid = TimeGrid::uniform(63);
  double psi_err = 0.0, sandwich_worst = 0.0, contraction_worst = -kInfinity;
  for (int trial = 0; trial < 100; ++trial) {
    const KernelParams p(std::exp(-7.0 + 8.0 * rng.uniform()), 0.1 + 3.0 * rng.uniform());
    const SampledPath psi = psi_operator(p, SampledPath(grid, Mat::Ones(1, 64)));
    for (std::size_t k = 0; k < grid.size(); ++k)
      psi_err = std::max(psi_err, std::abs(psi.at(k)(0) - p.gamma() * kernel_K(p, grid[k])));
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const KernelParams p(std::exp(-9.0 + 10.0 * rng.uniform()), 0.1 + 5.0 * rng.uniform());
    const double t = rng.uniform();
    const double g = kernel_phi(p, t) - t;
    // Positive when the sandwich is violated.
    sandwich_worst = std::max({sandwich_worst, -g, g - 2.0 * p.m() / p.gamma()});
  }
  const TimeGrid fine = TimeGrid::uniform(100);
  for (int trial = 0; trial < 1000; ++trial) {
    const KernelParams p(std::exp(-7.0 + 8.0 * rng.uniform()), 0.1 + 3.0 * rng.uniform());
    Mat v(1, 101);
    for (Eigen::Index k = 0; k < 101; ++k) v(0, k) = 6.0 * rng.uniform() - 3.0;
    const SampledPath f(fine, v);
    contraction_worst = std::max(contraction_worst, psi_operator(p, f).sup_norm() - f.sup_norm());
  }
  const bool pass = psi_err <= 1e-12 && sandwich_worst <= 0.0 && contraction_worst <= 1e-15;
  return {pass, fmt("psi(1) err %.2e <= 1e-12, sandwich excess %.2e <= 0, contraction excess %.2e <= 0", psi_err,
                    sandwich_worst, contraction_worst)};
}

Outcome reconstruction_order() {
  const KernelParams p(0.1, 1.0);
  const SDEConfig cfg = SDEConfig::identity(p, 1);
  const DriftField drift = [](double, const Vec& x, const Vec&) { return (-x).eval(); };
  const auto mean_residual = [&](std::size_t steps) {
    double total = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
      const Trajectory z = simulate_underdamped_exact(cfg, drift, Vec::Constant(1, 0.5), Vec::Constant(1, -0.2),
                                                      TimeGrid::uniform(steps), 17, i);
      total += reconstruction_residual(z, cfg);
    }
    return total / 20.0;
  };
  const double r256 = mean_residual(256), r512 = mean_residual(512), r1024 = mean_residual(1024);
  const double o1 = std::log2(r256 / r512), o2 = std::log2(r512 / r1024);
  return {std::min(o1, o2) >= 0.5, fmt("residuals %.3e %.3e %.3e, orders %.2f %.2f >= 0.5", r256, r512, r1024, o1, o2)};
}

double entropic_objective(const SinkhornPotentials& pot, const Mat& plan) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < plan.rows(); ++i)
    for (Eigen::Index j = 0; j < plan.cols(); ++j) {
      const double ref = std::log(pot.source.weight(i)) + std::log(pot.target.weight(j)) + pot.log_kernel(i, j);
      total += plan(i, j) * (std::log(plan(i, j)) - ref);
    }
  return total;
}

Outcome sinkhorn_checks() {
  RandomStream rng(103, 0);
  double residual = 0.0;
  for (Eigen::Index n = 2; n <= 32; ++n) {
    const EmpiricalMeasure p = random_measure(rng, n, 1), q = random_measure(rng, 2 + (n * 7) % 31, 1);
    residual = std::max(residual, sinkhorn(p, q, 1.0).residual);
  }
  double oracle_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const EmpiricalMeasure p = random_measure(rng, 2, 1), q = random_measure(rng, 2, 1);
    const SinkhornPotentials pot = sinkhorn(p, q, 0.5 + rng.uniform(), 1e-14);
    const Big a0 = p.weight(0), b0 = q.weight(0);
    Big log_ref[2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) log_ref[i][j] = log(Big(p.weight(i))) + log(Big(q.weight(j))) + Big(pot.log_kernel(i, j));
    auto objective = [&](Big s) {
      const Big cell[2][2] = {{s, a0 - s}, {b0 - s, 1 - a0 - b0 + s}};
      Big total = 0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) total += cell[i][j] * (log(cell[i][j]) - log_ref[i][j]);
      return total;
    };
    const Big lo = a0 + b0 - 1 > 0 ? Big(a0 + b0 - 1) : Big(0), hi = a0 < b0 ? a0 : b0;
    const auto best = boost::math::tools::brent_find_minima(objective, lo + Big(1e-30), hi - Big(1e-30), 150);
    oracle_err = std::max(oracle_err, std::abs(pot.plan()(0, 0) - static_cast<double>(best.first)));
  }
  const EmpiricalMeasure p = random_measure(rng, 3, 2), q = random_measure(rng, 3, 2);
  const SinkhornPotentials pot = sinkhorn(p, q, 1.0, 1e-13);
  const Mat plan = pot.plan();
  const double base = entropic_objective(pot, plan);
  double worst_drop = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto i = static_cast<Eigen::Index>(rng.uniform() * 3), k = (i + 1 + static_cast<Eigen::Index>(rng.uniform() * 2)) % 3;
    const auto j = static_cast<Eigen::Index>(rng.uniform() * 3), l = (j + 1 + static_cast<Eigen::Index>(rng.uniform() * 2)) % 3;
    const double room = std::min({plan(i, l), plan(k, j), plan(i, j), plan(k, l)});
    const double eps = (2.0 * rng.uniform() - 1.0) * 0.5 * room;
    Mat moved = plan;
    moved(i, j) += eps;
    moved(k, l) += eps;
    moved(i, l) -= eps;
    moved(k, j) -= eps;
    worst_drop = std::max(worst_drop, base - entropic_objective(pot, moved));
  }
  const bool pass = residual <= 1e-10 && oracle_err <= 1e-8 && worst_drop <= 1e-12;
  return {pass, fmt("residual %.2e <= 1e-10, 2x2 oracle err %.2e <= 1e-8, 3x3 max decrease %.2e <= 1e-12", residual,
                    oracle_err, worst_drop)};
}

Outcome gradient_checks() {
  RandomStream rng(107, 0);
  const double h = 1e-5;
  const EmpiricalMeasure p = random_measure(rng, 12, 2), q = random_measure(rng, 9, 2);
  const SinkhornPotentials pot = sinkhorn(p, q, 1.3);
  double drift_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double t = 0.05 + 0.9 * rng.uniform();
    Vec x(2);
    x << 2.0 * rng.normal(), 2.0 * rng.normal();
    const Vec drift = bridge_drift_m0(pot, t, x);
    for (Eigen::Index c = 0; c < 2; ++c) {
      Vec up = x, down = x;
      up(c) += h;
      down(c) -= h;
      const double fd = (bridge_log_potential(pot, t, up) - bridge_log_potential(pot, t, down)) / (2 * h) / pot.gamma;
      drift_err = std::max(drift_err, relative_error(drift(c), fd));
    }
  }
  const TerminalReward f = TerminalReward::cosine(0.5);
  const KernelParams kp(0.1, 1.0);
  double control_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double t = rng.uniform() * 0.999;
    const Vec x = Vec::Constant(1, 4 * rng.uniform() - 2), y = Vec::Constant(1, 4 * rng.uniform() - 2);
    const double fd =
        (psi_m_value(f, kp, t, x, (y.array() + h).matrix()) - psi_m_value(f, kp, t, x, (y.array() - h).matrix())) / (2 * h);
    control_err = std::max(control_err, relative_error(optimal_control_m(f, kp, t, x, y)(0), fd));
  }
  const bool pass = drift_err <= 1e-6 && control_err <= 1e-6;
  return {pass, fmt("drift rel err %.2e, control rel err %.2e (<= 1e-6, 100 points each)", drift_err, control_err)};
}

Outcome hjb_richardson() {
  const TerminalReward f = TerminalReward::cosine(0.5);
  const KernelParams p(0.1, 1.0);
  const double h = 0.01;
  RandomStream rng(109, 0);
  double lo = kInfinity, hi = -kInfinity;
  for (int i = 0; i < 50; ++i) {
    const double t = 0.1 + 0.8 * rng.uniform();
    const Vec x = Vec::Constant(1, 4 * rng.uniform() - 2), y = Vec::Constant(1, 4 * rng.uniform() - 2);
    const double a = hjb_residual_phi(f, 1.0, t, x, h) / hjb_residual_phi(f, 1.0, t, x, h / 2);
    const double b = hjb_residual_psi(f, p, t, x, y, h) / hjb_residual_psi(f, p, t, x, y, h / 2);
    lo = std::min({lo, a, b});
    hi = std::max({hi, a, b});
  }
  return {lo >= 3.5 && hi <= 4.5, fmt("ratios for phi and psi in [%.3f, %.3f] within [3.5, 4.5], h = %.3g -> %.3g", lo, hi, h, h / 2)};
}

ExperimentConfig flagship(const std::string& scenario) {
  ExperimentConfig c;
  c.scenario = scenario;
  c.threads = threads();
  c.out = std::filesystem::temp_directory_path() / "sotlab_acceptance";
  return c;
}

Outcome deterministic_identity() { return from_report(run_deterministic(flagship("deterministic")), {"DET."}); }

Outcome assumption_suite() { return from_report(run_assumptions(flagship("assumptions")), {"A."}); }

}  // namespace

int main() {
  const ScenarioReport* zero_mass = nullptr;
  ScenarioReport zm;
  const auto zero_mass_report = [&]() -> const ScenarioReport& {
    if (!zero_mass) {
      zm = run_zero_mass(flagship("zero_mass"));
      zero_mass = &zm;
    }
    return *zero_mass;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"kernel identities", kernel_identities},
      {"reconstruction order", reconstruction_order},
      {"sinkhorn", sinkhorn_checks},
      {"drift and control gradients", gradient_checks},
      {"hjb richardson ratios", hjb_richardson},
      {"zero-mass flagship",
       [&] { return from_report(zero_mass_report(), {"ZM.terminal_gap", "ZM.monotone_X", "ZM.monotone_Y", "ZM.cost_upper"}); }},
      {"duality flagship", [] { return from_report(run_duality(flagship("duality")), {"D."}); }},
      {"momentum admissibility",
       [&] { return from_report(zero_mass_report(), {"ZM.momentum_admissible", "ZM.bound_decreasing"}); }},
      {"deterministic identity", deterministic_identity},
      {"assumption suite", assumption_suite},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !outcome.pass;
    std::printf("[%s] %2zu %-28s %7.1fs  %s\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), seconds,
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
