#include "sotlab/costs.hpp"
#include "sotlab/numerics.hpp"
#include "sotlab/sde.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace sotlab;
using boost::math::quadrature::gauss_kronrod;

namespace {

double integrate(const std::function<double(double)>& fn, double a, double b) {
  return gauss_kronrod<double, 61>::integrate(fn, a, b, 15, 1e-15);
}

Vec scalar(double v) { return Vec::Constant(1, v); }

double mean_residual(std::size_t steps, std::size_t paths) {
  const KernelParams p(0.1, 1.0);
  const SDEConfig cfg = SDEConfig::identity(p, 1);
  const DriftField drift = [](double, const Vec& x, const Vec&) { return (-x).eval(); };
  double total = 0.0;
  for (std::size_t i = 0; i < paths; ++i) {
    const Trajectory z = simulate_underdamped_exact(cfg, drift, scalar(0.5), scalar(-0.2), TimeGrid::uniform(steps), 17, i);
    total += reconstruction_residual(z, cfg);
  }
  return total / static_cast<double>(paths);
}

}  // namespace

TEST(Sde, ExactStepCovarianceAgainstQuadrature) {
  for (auto [m, gamma, h] : {std::tuple{0.5, 1.0, 0.1}, {1e-3, 1.0, 0.5}, {0.02, 2.0, 1e-4}, {5.0, 0.3, 0.01}}) {
    const KernelParams p(m, gamma);
    const StepCovariance c = exact_step_covariance(p, h);
    const double cov = integrate([&](double s) { return kernel_K(p, s); }, 0.0, h);
    const double var = integrate([&](double s) { return std::pow(kernel_K(p, s), 2); }, 0.0, h);
    EXPECT_DOUBLE_EQ(c.var_b, h);
    EXPECT_NEAR(c.cov_bx / cov, 1.0, 1e-12);
    EXPECT_NEAR(c.var_x / var, 1.0, 1e-12);
    EXPECT_NEAR(c.schur / (var - cov * cov / h), 1.0, 1e-6);
    EXPECT_GT(c.schur, 0.0);
  }
  const StepCovariance c = exact_step_covariance(KernelParams(0.5, 1.0), 0.1);
  const KernelParams p(0.5, 1.0);
  EXPECT_NEAR(c.var_x, integrate([&](double s) { return std::pow(kernel_K(p, s), 2); }, 0.0, 0.1), 1e-10);
}

TEST(Sde, EulerFreeRelaxation) {
  // Initial velocity v means momentum y0 = m v; then X(1) = x0 + (m v / gamma)(1 - e^{-gamma/m}).
  const KernelParams p(0.2, 1.0);
  const SDEConfig cfg(p, Mat::Zero(1, 1));
  const double v = 1.5;
  const double exact = 0.3 + p.m() * v / p.gamma() * (1.0 - std::exp(-p.rate()));
  double err_prev = kInfinity;
  for (std::size_t n : {256, 512, 1024}) {
    const Trajectory z = simulate_underdamped_euler(cfg, zero_drift(1), scalar(0.3), scalar(p.m() * v), TimeGrid::uniform(n), 1);
    const double err = std::abs(z.X(0, static_cast<Eigen::Index>(n)) - exact);
    EXPECT_LT(err, 2.0 * p.m() * v / static_cast<double>(n) * p.rate());
    EXPECT_LT(err, err_prev);
    err_prev = err;
  }
}

TEST(Sde, EulerZeroIsConstant) {
  const SDEConfig cfg(KernelParams(0.2, 1.0), Mat::Zero(2, 2));
  const Vec x0 = Vec::Constant(2, -0.7);
  const Trajectory z = simulate_underdamped_euler(cfg, zero_drift(2), x0, Vec::Zero(2), TimeGrid::uniform(64), 1);
  for (Eigen::Index k = 0; k < z.X.cols(); ++k) EXPECT_EQ(z.X.col(k), x0);
}

TEST(Sde, EulerStabilityGuard) {
  const SDEConfig cfg = SDEConfig::identity(KernelParams(1e-3, 1.0), 1);
  EXPECT_THROW(simulate_underdamped_euler(cfg, zero_drift(1), scalar(0), scalar(0), TimeGrid::uniform(10), 1),
               StabilityError);
}

TEST(Sde, EulerConstantControlMatchesOde) {
  // For constant u the linear ODE is solved in closed form; Euler error is O(step).
  const KernelParams p(0.3, 1.0);
  const SDEConfig cfg(p, Mat::Zero(1, 1));
  const double c = 0.8, a = p.rate();
  const double x1 = c * (1.0 - (1.0 - std::exp(-a)) / a) / p.gamma();
  const Trajectory z = simulate_underdamped_euler(cfg, constant_drift(scalar(c)), scalar(0), scalar(0), TimeGrid::uniform(4096), 1);
  EXPECT_NEAR(z.X(0, 4096), x1, 5.0 * a / 4096.0);
}

TEST(Sde, ExactDeterministicIsStepFree) {
  const KernelParams p(0.05, 1.0);
  const SDEConfig cfg(p, Mat::Zero(1, 1));
  const double c = -1.2, y0 = 0.4, a = p.rate();
  const Trajectory coarse = simulate_underdamped_exact(cfg, constant_drift(scalar(c)), scalar(1), scalar(y0), TimeGrid::uniform(3), 1);
  const Trajectory fine = simulate_underdamped_exact(cfg, constant_drift(scalar(c)), scalar(1), scalar(y0), TimeGrid::uniform(977), 1);
  EXPECT_NEAR(coarse.X(0, 3), fine.X(0, 977), 1e-12);
  EXPECT_NEAR(coarse.Y(0, 3), fine.Y(0, 977), 1e-12);
  const double k1 = kernel_K(p, 1.0);
  const double ed = a - (1.0 - std::exp(-a));
  EXPECT_NEAR(coarse.X(0, 3), 1.0 + k1 * y0 + c * ed / (p.gamma() * a), 1e-12);
  EXPECT_NEAR(coarse.Y(0, 3), std::exp(-a) * y0 + (1.0 - std::exp(-a)) * c / a, 1e-12);
}

TEST(Sde, ExactStepMeanAgainstQuadrature) {
  // One step from (x0, y0) with constant u: mean of X(h) = x0 + K(h) y0 + u int_0^h K.
  const KernelParams p(0.4, 1.5);
  const SDEConfig cfg(p, Mat::Zero(1, 1));
  const double h = 0.3, u = 0.9;
  const Trajectory z = simulate_underdamped_exact(cfg, constant_drift(scalar(u)), scalar(0.1), scalar(2.0),
                                                  TimeGrid({0.0, h}), 1);
  const double mean = 0.1 + kernel_K(p, h) * 2.0 + u * integrate([&](double s) { return kernel_K(p, s); }, 0.0, h);
  EXPECT_NEAR(z.X(0, 1), mean, 1e-12);
}

TEST(Sde, ExactIsStepFreeInLaw) {
  const KernelParams p(0.1, 1.0);
  const SDEConfig cfg = SDEConfig::identity(p, 1);
  const double c = 0.5, a = p.rate();
  const double mean_x = kernel_K(p, 1.0) * 0.3 + c * (a - (1.0 - std::exp(-a))) / (p.gamma() * a);
  const double var_x = numerics::squared_kernel_integral(a) / (p.gamma() * p.gamma() * a);
  for (std::size_t steps : {16, 256}) {
    std::vector<double> xs, dev;
    for (std::size_t i = 0; i < 10000; ++i) {
      const Trajectory z = simulate_underdamped_exact(cfg, constant_drift(scalar(c)), scalar(0), scalar(0.3),
                                                      TimeGrid::uniform(steps), 99, i);
      xs.push_back(z.X(0, static_cast<Eigen::Index>(steps)));
      dev.push_back(std::pow(xs.back() - mean_x, 2));
    }
    const auto m = mc_value(xs), v = mc_value(dev);
    EXPECT_LE(std::abs(m.mean - mean_x), 3.0 * m.stderr) << steps;
    EXPECT_LE(std::abs(v.mean - var_x), 3.0 * v.stderr) << steps;
  }
}

TEST(Sde, OverdampedBrownianVariance) {
  const SDEConfig cfg = SDEConfig::identity(KernelParams(1.0, 1.0), 2);
  std::vector<double> sq;
  for (std::size_t i = 0; i < 10000; ++i) {
    const Trajectory z = simulate_overdamped(cfg, zero_drift(2), Vec::Zero(2), TimeGrid::uniform(8), 5, i);
    sq.push_back(z.X.col(8).squaredNorm());
  }
  const auto e = mc_value(sq);
  EXPECT_LE(std::abs(e.mean - 2.0), 3.0 * e.stderr);
  EXPECT_EQ(simulate_overdamped(cfg, zero_drift(2), Vec::Zero(2), TimeGrid::uniform(8), 5, 0).Y.cols(), 0);
}

TEST(Sde, OverdampedStraightLine) {
  const SDEConfig cfg(KernelParams(1.0, 2.0), Mat::Zero(1, 1));
  const Trajectory z = simulate_overdamped(cfg, constant_drift(scalar(3.0)), scalar(1.0), TimeGrid::uniform(10), 1);
  for (std::size_t k = 0; k <= 10; ++k) EXPECT_NEAR(z.X(0, static_cast<Eigen::Index>(k)), 1.0 + 1.5 * (k / 10.0), 1e-15);
}

TEST(Sde, DecomposeTrivialParts) {
  const SDEConfig zero_noise(KernelParams(0.2, 1.0), Mat::Zero(1, 1));
  const Trajectory a = simulate_underdamped_exact(zero_noise, constant_drift(scalar(1)), scalar(0), scalar(0), TimeGrid::uniform(8), 1);
  EXPECT_EQ(decompose(a, zero_noise).second.values().cwiseAbs().maxCoeff(), 0.0);
  const SDEConfig noisy = SDEConfig::identity(KernelParams(0.2, 1.0), 1);
  const Trajectory b = simulate_underdamped_exact(noisy, zero_drift(1), scalar(0), scalar(0), TimeGrid::uniform(8), 1);
  EXPECT_EQ(decompose(b, noisy).first.values().cwiseAbs().maxCoeff(), 0.0);
  Trajectory c = b;
  c.dW.resize(1, 0);
  EXPECT_THROW(decompose(c, noisy), DomainError);
}

TEST(Sde, MomentumIdentity) {
  // Y(t) - Y(0) + gamma (X(t) - X(0)) = sum of left-point u h + sigma dW exactly; the trapezoid U
  // differs from the left-point sum by h (u_k - u_0) / 2 on a uniform grid.
  const KernelParams p(0.05, 1.0);
  const SDEConfig cfg = SDEConfig::identity(p, 1);
  const DriftField drift = [](double t, const Vec& x, const Vec&) { return (std::sin(3 * t) - x.array()).matrix().eval(); };
  for (std::size_t steps : {256, 512, 1024}) {
    const Trajectory z = simulate_underdamped_exact(cfg, drift, scalar(0), scalar(0), TimeGrid::uniform(steps), 4);
    const auto [U, M] = decompose(z, cfg);
    const double h = 1.0 / static_cast<double>(steps);
    for (Eigen::Index k = 0; k < z.X.cols(); ++k) {
      const double lhs = z.Y(0, k) - z.Y(0, 0) + p.gamma() * (z.X(0, k) - z.X(0, 0));
      const double rhs = U.values()(0, k) + M.values()(0, k) - 0.5 * h * (z.u(0, k) - z.u(0, 0));
      ASSERT_NEAR(lhs, rhs, 1e-12) << steps << " " << k;
    }
  }
}

TEST(Sde, ReconstructionOrder) {
  const double r256 = mean_residual(256, 20), r512 = mean_residual(512, 20), r1024 = mean_residual(1024, 20);
  EXPECT_GE(std::log2(r256 / r512), 0.5);
  EXPECT_GE(std::log2(r512 / r1024), 0.5);
}

TEST(Sde, Determinism) {
  const SDEConfig cfg = SDEConfig::identity(KernelParams(0.1, 1.0), 2);
  const auto run = [&] {
    return simulate_underdamped_exact(cfg, zero_drift(2), Vec::Zero(2), Vec::Ones(2), TimeGrid::uniform(64), 42, 7);
  };
  const Trajectory a = run(), b = run();
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.Y, b.Y);
  EXPECT_EQ(a.dW, b.dW);
}

TEST(Sde, DriftFrozenNearTerminal) {
  const SDEConfig cfg(KernelParams(1.0, 1.0), Mat::Zero(1, 1));
  const DriftField blowup = [](double t, const Vec&, const Vec&) { return Vec::Constant(1, 1.0 / (1.0 - t)); };
  const Trajectory z = simulate_overdamped(cfg, blowup, scalar(0), TimeGrid::uniform(4), 1);
  EXPECT_TRUE(z.u.allFinite());
  EXPECT_EQ(z.u(0, 4), z.u(0, 3));
}

TEST(Sde, TrajectoryCsv) {
  const auto path = std::filesystem::temp_directory_path() / "sotlab_traj.csv";
  const SDEConfig cfg = SDEConfig::identity(KernelParams(0.1, 1.0), 2);
  const Trajectory z = simulate_underdamped_exact(cfg, zero_drift(2), Vec::Zero(2), Vec::Ones(2), TimeGrid::uniform(4), 1);
  write_trajectory_csv(z, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,x_1,x_2,y_1,y_2,u_1,u_2");
  int lines = 0;
  for (std::string row; std::getline(in, row);) ++lines;
  EXPECT_EQ(lines, 5);
  std::filesystem::remove(path);
}
