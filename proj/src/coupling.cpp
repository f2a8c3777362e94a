#include "sotlab/coupling.hpp"

#include "sotlab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sotlab {
namespace {

void require_eval_grid(const TimeGrid& grid) {
  if (grid.size() < 2) throw DomainError("coupling: evaluation grid needs at least two nodes");
  if (grid.front() != 0.0 || grid.back() != 1.0) throw DomainError("coupling: evaluation grid must span [0, 1]");
  if (!(grid[grid.size() - 2] < 1.0)) throw DomainError("coupling: interior evaluation reaches t = 1");
}

TimeGrid interior_of(const TimeGrid& grid) {
  std::vector<double> nodes(grid.nodes().begin(), grid.nodes().end() - 1);
  return TimeGrid(std::move(nodes));
}

}  // namespace

TimeGrid warped_union_grid(const TimeGrid& eval_grid, const std::vector<KernelParams>& params) {
  require_eval_grid(eval_grid);
  std::vector<double> nodes = eval_grid.nodes();
  for (const auto& p : params)
    for (std::size_t k = 0; k + 1 < eval_grid.size(); ++k) nodes.push_back(kernel_phi(p, eval_grid[k]));
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return TimeGrid(std::move(nodes));
}

WarpedSamples sample_warped(const Trajectory& X, const KernelParams& params, const TimeGrid& eval_grid) {
  require_eval_grid(eval_grid);
  if (X.grid.front() != 0.0 || X.grid.back() != 1.0) throw DomainError("sample_warped: source must span [0, 1]");
  const auto n = static_cast<Eigen::Index>(eval_grid.size());
  WarpedSamples out{eval_grid, Mat(X.dim(), n), Mat(X.dim(), n), X.X.col(0)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const double s = k + 1 == n ? 1.0 : kernel_phi(params, eval_grid[static_cast<std::size_t>(k)]);
    const std::size_t at = X.grid.find(s);
    if (at == TimeGrid::npos)
      throw DomainError("sample_warped: warped time " + std::to_string(s) + " is not a node of the source grid");
    out.x.col(k) = X.X.col(static_cast<Eigen::Index>(at));
    out.u.col(k) = X.u.col(static_cast<Eigen::Index>(at));
  }
  return out;
}

CouplingResult build_zm(const WarpedSamples& samples, const KernelParams& params) {
  const TimeGrid& grid = samples.eval_grid;
  require_eval_grid(grid);
  const auto n = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index d = samples.x.rows();
  const Vec& x0 = samples.x0;
  const double a = params.rate(), g = params.gamma();
  const double k1 = kernel_K(params, 1.0);

  // g(t_k) = X(phi(t_k)) on interior nodes; Psi(g / f^2) integrated exactly.
  const TimeGrid interior = interior_of(grid);
  const SampledPath warped(interior, samples.x.leftCols(n - 1));
  const SampledPath smoothed = psi_weighted(params, warped);

  Mat xm(d, n), ym(d, n), control(d, n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double t = grid[static_cast<std::size_t>(k)];
    const double kt = kernel_K(params, t);
    const double ft = kernel_f(params, t);
    const double k_rest = kernel_K(params, 1.0 - t);
    xm.col(k) = (1.0 - kt / k1) * x0 + ft * smoothed.at(static_cast<std::size_t>(k));
    ym.col(k) = -std::exp(-a * t) / k1 * x0 + samples.x.col(k) / k_rest - g * smoothed.at(static_cast<std::size_t>(k));
    control.col(k) = ft * samples.u.col(k);
  }
  ym.col(0) = (samples.x.col(0) - x0) / k1;

  // eta^m = X^m + K(1 - t) Y^m advanced by the last warped increment must land on X(1).
  const Eigen::Index last = n - 2;
  const double k_last = kernel_K(params, 1.0 - grid[static_cast<std::size_t>(last)]);
  const Vec eta_end = xm.col(last) + k_last * ym.col(last) + (samples.x.col(n - 1) - samples.x.col(last));
  const double gap = (eta_end - samples.x.col(n - 1)).norm();

  xm.col(n - 1) = samples.x.col(n - 1);
  ym.col(n - 1) = ym.col(last);
  control.col(n - 1).setZero();

  CouplingResult out{SampledPath(grid, std::move(xm)), SampledPath(grid, ym),  SampledPath(grid, std::move(control)),
                     gap,                               params,                ym.col(0),
                     Vec::Zero(d)};
  return out;
}

CouplingResult build_zm(const Trajectory& X, const KernelParams& params, const TimeGrid& eval_grid) {
  return build_zm(sample_warped(X, params, eval_grid), params);
}

double beta_response_momentum(const KernelParams& params, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("beta_response_momentum: t must lie in [0, 1]");
  const double a = params.rate();
  // int_0^t e^{-a(t-s)} f(s) ds
  return numerics::one_minus_exp(a * t) / a - (std::exp(-a * (1.0 - t)) - std::exp(-a * (1.0 + t))) / (2.0 * a);
}

double beta_response_position(const KernelParams& params, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("beta_response_position: t must lie in [0, 1]");
  const double a = params.rate();
  // (1/m) int_0^t A = (1/gamma)(F - A), F(t) = int_0^t f
  const double f_int = t - (std::exp(-a * (1.0 - t)) - std::exp(-a)) / a;
  return (f_int - beta_response_momentum(params, t)) / params.gamma();
}

CouplingResult build_zm_beta(const WarpedSamples& samples, const Vec& y0_sample, const KernelParams& params) {
  if (y0_sample.size() != samples.x.rows() || !y0_sample.allFinite())
    throw DomainError("build_zm_beta: y0 sample has wrong dimension or is not finite");
  CouplingResult base = build_zm(samples, params);
  const TimeGrid& grid = samples.eval_grid;
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double a = params.rate(), g = params.gamma();
  const double k1 = kernel_K(params, 1.0);
  const double phi0 = kernel_phi(params, 0.0);

  const Vec excess = samples.x.col(0) - samples.x0 - k1 * y0_sample;
  const Vec c = excess / k1;
  const Vec beta = (g / (1.0 - phi0)) * excess;

  Mat xm = base.Xm.values(), ym = base.Ym.values(), control = base.control.values();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = grid[static_cast<std::size_t>(k)];
    xm.col(k) += -kernel_K(params, t) * c + beta_response_position(params, t) * beta;
    if (k + 1 < n) {
      ym.col(k) += -std::exp(-a * t) * c + beta_response_momentum(params, t) * beta;
      control.col(k) = kernel_f(params, t) * (samples.u.col(k) + beta);
    }
  }
  ym.col(0) = y0_sample;
  ym.col(n - 1) = ym.col(n - 2);
  const double gap = std::max(base.terminal_gap, (xm.col(n - 1) - samples.x.col(n - 1)).norm());
  xm.col(n - 1) = samples.x.col(n - 1);

  CouplingResult out{SampledPath(grid, std::move(xm)), SampledPath(grid, std::move(ym)),
                     SampledPath(grid, std::move(control)), gap, params, y0_sample, beta};
  return out;
}

CouplingResult build_zm_beta(const Trajectory& X, const Vec& y0_sample, const KernelParams& params,
                             const TimeGrid& eval_grid) {
  return build_zm_beta(sample_warped(X, params, eval_grid), y0_sample, params);
}

SampledPath eta_transform(const Trajectory& Z, const KernelParams& params) {
  if (!Z.has_momentum()) throw DomainError("eta_transform: trajectory carries no momentum");
  Mat eta = Z.X;
  for (std::size_t k = 0; k < Z.grid.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(k);
    eta.col(j) += kernel_K(params, 1.0 - Z.grid[k]) * Z.Y.col(j);
  }
  return SampledPath(Z.grid, std::move(eta));
}

double momentum_bound(const KernelParams& params, double v0_plus_1, const std::function<double(double)>& c1_lower,
                      Eigen::Index dim) {
  if (!(v0_plus_1 >= 0.0) || dim < 1) throw DomainError("momentum_bound: need v0_plus_1 >= 0 and d >= 1");
  const double phi0 = kernel_phi(params, 0.0);
  const double noise = std::sqrt(static_cast<double>(dim) * phi0);
  auto bracket = [&](double log_r) {
    const double r = std::exp(log_r);
    const double c1 = c1_lower(r);
    if (!(c1 > 0.0)) return kInfinity;
    return r * phi0 + v0_plus_1 / c1 + noise;
  };
  const double best = numerics::golden_section_min(bracket, std::log(1e-6), std::log(1e6), 1e-10);
  const double value = bracket(best) / kernel_f(params, 0.0);
  if (!std::isfinite(value)) throw NumericalError("momentum_bound: infimum is not finite");
  return value;
}

}  // namespace sotlab
