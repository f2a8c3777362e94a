#pragma once

#include "sotlab/core.hpp"
#include "sotlab/kernels.hpp"
#include "sotlab/sde.hpp"

#include <functional>
#include <vector>

namespace sotlab {

/// Positive-mass path Z^m built from an overdamped path X. Nodes follow the evaluation grid,
/// whose last node is t = 1; Ym at t = 1 repeats the last interior value.
struct CouplingResult {
  SampledPath Xm;
  SampledPath Ym;
  SampledPath control;  ///< v^m(t_k) fed to the cost
  double terminal_gap = 0.0;
  KernelParams params;
  Vec y0;    ///< initial momentum used
  Vec beta;  ///< constant control shift (zero for build_zm)
};

/// X(phi^m(t_k)) and u(phi^m(t_k)) at the nodes of an evaluation grid, plus X(0).
struct WarpedSamples {
  TimeGrid eval_grid;
  Mat x;
  Mat u;
  Vec x0;
};

/// Sorted union of the evaluation nodes and phi^m(t_k) for every params entry.
TimeGrid warped_union_grid(const TimeGrid& eval_grid, const std::vector<KernelParams>& params);

/// Reads X and u at phi^m(t_k); every warped time must be a node of the trajectory grid.
WarpedSamples sample_warped(const Trajectory& X, const KernelParams& params, const TimeGrid& eval_grid);

CouplingResult build_zm(const WarpedSamples& samples, const KernelParams& params);
CouplingResult build_zm(const Trajectory& X, const KernelParams& params, const TimeGrid& eval_grid);

/// Variant with prescribed initial momentum y0 and control shift beta.
CouplingResult build_zm_beta(const WarpedSamples& samples, const Vec& y0_sample, const KernelParams& params);
CouplingResult build_zm_beta(const Trajectory& X, const Vec& y0_sample, const KernelParams& params,
                             const TimeGrid& eval_grid);

/// Response of (X, Y) to the unit control f^m(t) from rest: Y part A(t), X part B(t).
double beta_response_momentum(const KernelParams& params, double t);
double beta_response_position(const KernelParams& params, double t);

/// eta(t) = X(t) + K(1 - t) Y(t).
SampledPath eta_transform(const Trajectory& Z, const KernelParams& params);

/// (1/f(0)) inf_R [R phi(0) + v0_plus_1 / C_{1,R} + sqrt(d phi(0))], searched on log R in [1e-6, 1e6].
double momentum_bound(const KernelParams& params, double v0_plus_1, const std::function<double(double)>& c1_lower,
                      Eigen::Index dim);

}  // namespace sotlab
