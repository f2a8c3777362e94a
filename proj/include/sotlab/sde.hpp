#pragma once

#include "sotlab/core.hpp"
#include "sotlab/kernels.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <utility>

namespace sotlab {

/// Physical constants plus a constant noise matrix sigma (d x d).
struct SDEConfig {
  KernelParams params;
  Mat sigma;

  SDEConfig(KernelParams params, Mat sigma);
  /// sigma = identity in dimension d.
  static SDEConfig identity(KernelParams params, Eigen::Index dim);

  Eigen::Index dim() const noexcept { return sigma.rows(); }
};

/// Feedback control u(t, x, y); y is empty for overdamped runs.
using DriftField = std::function<Vec(double t, const Vec& x, const Vec& y)>;

/// Zero control in dimension d.
DriftField zero_drift(Eigen::Index dim);
/// Constant control c.
DriftField constant_drift(Vec c);

/// Controls are frozen at their last value for t >= 1 - kDriftGuard.
inline constexpr double kDriftGuard = 1e-6;

/// One simulated path. Columns index grid nodes; dW has one column per step.
struct Trajectory {
  TimeGrid grid;
  Mat X;
  Mat Y;  ///< 0 columns for overdamped runs.
  Mat u;
  Mat dW;
  std::uint64_t seed = 0;
  std::uint64_t path = 0;

  bool has_momentum() const noexcept { return Y.cols() > 0; }
  Eigen::Index dim() const noexcept { return X.rows(); }
};

/// Euler-Maruyama for dX = Y/m dt, dY = (u - (gamma/m) Y) dt + sigma dW.
/// Throws StabilityError when gamma * step / m > 10 on any step.
Trajectory simulate_underdamped_euler(const SDEConfig& config, const DriftField& drift, const Vec& x0,
                                      const Vec& y0, const TimeGrid& grid, std::uint64_t seed,
                                      std::uint64_t path = 0);

/// Exact-in-law step for the linear dynamics with u frozen at the left node.
Trajectory simulate_underdamped_exact(const SDEConfig& config, const DriftField& drift, const Vec& x0,
                                      const Vec& y0, const TimeGrid& grid, std::uint64_t seed,
                                      std::uint64_t path = 0);

/// Euler-Maruyama for gamma dX = u dt + sigma dW; the mass is ignored.
Trajectory simulate_overdamped(const SDEConfig& config, const DriftField& drift, const Vec& x0,
                               const TimeGrid& grid, std::uint64_t seed, std::uint64_t path = 0);

/// Covariance of (Delta W, int_0^h K(h - s) dW) for one step of length h, per noise coordinate.
struct StepCovariance {
  double var_b;
  double cov_bx;
  double var_x;
  /// Schur complement var_x - cov_bx^2 / var_b, evaluated without cancellation.
  double schur;
};
StepCovariance exact_step_covariance(const KernelParams& params, double h);

/// U(t) = int_0^t u (trapezoid) and M(t) = sum sigma dW, both starting at 0.
std::pair<SampledPath, SampledPath> decompose(const Trajectory& traj, const SDEConfig& config);

/// max over nodes of |X(t) - X(0) - Psi(U + M + Y(0))(t) / gamma|; needs momentum samples.
double reconstruction_residual(const Trajectory& traj, const SDEConfig& config);

/// CSV with columns t, x_1..x_d, y_1..y_d (underdamped only), u_1..u_d.
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

}  // namespace sotlab
