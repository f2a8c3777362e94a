#include "sotlab/costs.hpp"
#include "sotlab/coupling.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace sotlab;

namespace {

double integrate(const std::function<double(double)>& fn, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(fn, a, b, 15, 1e-15);
}

// Overdamped path sampled on the union grid of an evaluation grid and its warp.
Trajectory brownian_on(const TimeGrid& grid, std::uint64_t path, double x0 = 0.2) {
  const SDEConfig cfg = SDEConfig::identity(KernelParams(1.0, 1.0), 1);
  const DriftField drift = [](double, const Vec& x, const Vec&) { return (1.0 - x.array()).matrix().eval(); };
  return simulate_overdamped(cfg, drift, Vec::Constant(1, x0), grid, 77, path);
}

// Smooth deterministic path X(s) = sin(3 s) + s^2 with control gamma X'.
Trajectory smooth_on(const TimeGrid& grid) {
  Trajectory z;
  z.grid = grid;
  z.X.resize(1, static_cast<Eigen::Index>(grid.size()));
  z.u.resize(1, static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double s = grid[k];
    z.X(0, static_cast<Eigen::Index>(k)) = std::sin(3 * s) + s * s;
    z.u(0, static_cast<Eigen::Index>(k)) = 3 * std::cos(3 * s) + 2 * s;
  }
  z.dW = Mat::Zero(1, static_cast<Eigen::Index>(grid.size()) - 1);
  return z;
}

}  // namespace

TEST(Coupling, UnionGridContainsWarpedNodes) {
  const TimeGrid eval = TimeGrid::uniform(64);
  const std::vector<KernelParams> ps{KernelParams(0.2, 1.0), KernelParams(0.05, 1.0)};
  const TimeGrid joint = warped_union_grid(eval, ps);
  for (const auto& p : ps)
    for (std::size_t k = 0; k + 1 < eval.size(); ++k) EXPECT_NE(joint.find(kernel_phi(p, eval[k])), TimeGrid::npos);
  for (double t : eval.nodes()) EXPECT_NE(joint.find(t), TimeGrid::npos);
}

TEST(Coupling, SampleWarpedRejectsMissingNodes) {
  const TimeGrid eval = TimeGrid::uniform(8);
  EXPECT_THROW(sample_warped(brownian_on(eval, 0), KernelParams(0.1, 1.0), eval), DomainError);
}

TEST(Coupling, EtaIdentityAndTerminalGap) {
  const KernelParams p(0.05, 1.0);
  const TimeGrid eval = TimeGrid::uniform(256);
  const TimeGrid joint = warped_union_grid(eval, {p});
  for (std::uint64_t path = 0; path < 20; ++path) {
    const Trajectory x = brownian_on(joint, path);
    const CouplingResult r = build_zm(x, p, eval);
    EXPECT_LE(r.terminal_gap, 1e-12);
    EXPECT_EQ(r.Xm.at(eval.size() - 1), x.X.col(static_cast<Eigen::Index>(joint.size()) - 1));
    for (std::size_t k = 0; k + 1 < eval.size(); ++k) {
      const double eta = r.Xm.at(k)(0) + kernel_K(p, 1.0 - eval[k]) * r.Ym.at(k)(0);
      EXPECT_NEAR(eta, x.X(0, static_cast<Eigen::Index>(joint.find(kernel_phi(p, eval[k])))), 1e-12);
    }
    EXPECT_NEAR(r.Xm.at(0)(0), 0.2, 1e-15);
  }
}

TEST(Coupling, InitialMomentumFormula) {
  const KernelParams p(0.1, 1.5);
  const TimeGrid eval = TimeGrid::uniform(32);
  const Trajectory x = brownian_on(warped_union_grid(eval, {p}), 3);
  const CouplingResult r = build_zm(x, p, eval);
  const double x_phi0 = x.X(0, static_cast<Eigen::Index>(x.grid.find(kernel_phi(p, 0.0))));
  EXPECT_NEAR(r.Ym.at(0)(0), (x_phi0 - 0.2) / kernel_K(p, 1.0), 1e-13);
  EXPECT_NEAR(r.y0(0), r.Ym.at(0)(0), 0.0);
  EXPECT_EQ(r.beta.norm(), 0.0);
}

TEST(Coupling, PositionDerivativeIsMomentumOverMass) {
  const KernelParams p(0.1, 1.0);
  double prev = kInfinity;
  for (std::size_t n : {256, 512, 1024}) {
    const TimeGrid eval = TimeGrid::uniform(n);
    const CouplingResult r = build_zm(smooth_on(warped_union_grid(eval, {p})), p, eval);
    double worst = 0.0;
    for (std::size_t k = 0; k + 2 < eval.size(); ++k) {
      const double dx = (r.Xm.at(k + 1)(0) - r.Xm.at(k)(0)) / eval.step(k);
      const double y = 0.5 * (r.Ym.at(k)(0) + r.Ym.at(k + 1)(0)) / p.m();
      worst = std::max(worst, std::abs(dx - y));
    }
    EXPECT_LT(worst, 0.6 * prev);
    prev = worst;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(Coupling, BetaResponseSolvesOde) {
  for (double m : {0.02, 0.3}) {
    const KernelParams p(m, 1.2);
    const double a = p.rate();
    for (double t : {0.0, 0.2, 0.7, 1.0}) {
      const double A = integrate([&](double s) { return std::exp(-a * (t - s)) * kernel_f(p, s); }, 0.0, t);
      const double B = integrate([&](double s) { return beta_response_momentum(p, s); }, 0.0, t) / m;
      EXPECT_NEAR(beta_response_momentum(p, t), A, 1e-13);
      EXPECT_NEAR(beta_response_position(p, t), B, 1e-12);
    }
    // gamma B(1) = int_0^1 f^2 = 1 - phi(0): the shift closes the terminal gap.
    EXPECT_NEAR(p.gamma() * beta_response_position(p, 1.0), 1.0 - kernel_phi(p, 0.0), 1e-13);
  }
}

TEST(Coupling, BetaWithMatchedMomentumReduces) {
  const KernelParams p(0.05, 1.0);
  const TimeGrid eval = TimeGrid::uniform(128);
  const Trajectory x = brownian_on(warped_union_grid(eval, {p}), 5);
  const CouplingResult base = build_zm(x, p, eval);
  const CouplingResult beta = build_zm_beta(x, base.y0, p, eval);
  EXPECT_LT(beta.beta.norm(), 1e-13);
  EXPECT_LT((beta.Xm.values() - base.Xm.values()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((beta.Ym.values() - base.Ym.values()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Coupling, BetaPrescribedMomentumKeepsEndpoints) {
  const KernelParams p(0.05, 1.0);
  const TimeGrid eval = TimeGrid::uniform(128);
  const Trajectory x = brownian_on(warped_union_grid(eval, {p}), 6);
  const Vec y0 = Vec::Constant(1, 0.37);
  const CouplingResult r = build_zm_beta(x, y0, p, eval);
  EXPECT_EQ(r.Ym.at(0)(0), 0.37);
  EXPECT_NEAR(r.Xm.at(0)(0), 0.2, 1e-15);
  EXPECT_LE(r.terminal_gap, 1e-12);
  EXPECT_THROW(build_zm_beta(x, Vec::Zero(2), p, eval), DomainError);
}

TEST(Coupling, EtaTransform) {
  const KernelParams p(0.1, 1.0);
  const SDEConfig cfg = SDEConfig::identity(p, 1);
  const Trajectory z = simulate_underdamped_exact(cfg, zero_drift(1), Vec::Zero(1), Vec::Ones(1), TimeGrid::uniform(16), 1);
  const SampledPath eta = eta_transform(z, p);
  for (std::size_t k = 0; k < z.grid.size(); ++k)
    EXPECT_DOUBLE_EQ(eta.at(k)(0), z.X(0, static_cast<Eigen::Index>(k)) + kernel_K(p, 1 - z.grid[k]) * z.Y(0, static_cast<Eigen::Index>(k)));
  EXPECT_THROW(eta_transform(brownian_on(TimeGrid::uniform(4), 0), p), DomainError);
}

TEST(Coupling, MomentumBoundShrinksWithMass) {
  const CostFunction cost = CostFunction::quadratic();
  const auto c1 = [&](double r) { return cost.c1_lower(r); };
  double prev = kInfinity;
  for (double m : {0.2, 0.1, 0.05, 0.02, 0.005}) {
    const double c = momentum_bound(KernelParams(m, 1.0), 2.0, c1, 1);
    EXPECT_GT(c, 0.0);
    EXPECT_LT(c, prev);
    prev = c;
  }
}
