#include "sotlab/kernels.hpp"

#include "sotlab/numerics.hpp"

#include <cmath>
#include <string>

namespace sotlab {
namespace {

using numerics::one_minus_exp;

void require_unit(double t, const char* who) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError(std::string(who) + ": t must lie in [0, 1]");
}

void require_origin(const SampledPath& g, const char* who) {
  if (g.size() == 0) throw DomainError(std::string(who) + ": empty path");
  if (g.grid().front() != 0.0) throw DomainError(std::string(who) + ": grid must start at 0");
  if (g.grid().back() > 1.0) throw DomainError(std::string(who) + ": grid leaves [0, 1]");
}

}  // namespace

KernelParams::KernelParams(double m, double gamma) : m_(m), gamma_(gamma) {
  if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("KernelParams: mass must be positive and finite");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw DomainError("KernelParams: friction must be positive and finite");
}

double kernel_K(const KernelParams& params, double t) {
  require_unit(t, "kernel_K");
  return one_minus_exp(params.rate() * t) / params.gamma();
}

double kernel_f(const KernelParams& params, double t) {
  require_unit(t, "kernel_f");
  return one_minus_exp(params.rate() * (1.0 - t));
}

double kernel_phi(const KernelParams& params, double t) {
  require_unit(t, "kernel_phi");
  const double x = params.rate() * (1.0 - t);
  const double scale = params.m() / params.gamma();
  // int_t^1 f^2 = (1-t) - 2 scale (1-e^{-x}) + (scale/2)(1-e^{-2x})
  return t + 2.0 * scale * one_minus_exp(x) - 0.5 * scale * one_minus_exp(2.0 * x);
}

double kernel_phi_inverse(const KernelParams& params, double s) {
  const double lo_value = kernel_phi(params, 0.0);
  if (!(s >= lo_value && s <= 1.0)) throw DomainError("kernel_phi_inverse: s outside [phi(0), 1]");
  if (s == 1.0) return 1.0;
  // phi' = f^2 <= 1, so an abscissa bracket of width 1e-13 bounds the value error.
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (kernel_phi(params, mid) < s)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

SampledPath psi_operator(const KernelParams& params, const SampledPath& g) {
  require_origin(g, "psi_operator");
  const double a = params.rate();
  const auto& grid = g.grid();
  Mat out = Mat::Zero(g.dim(), static_cast<Eigen::Index>(g.size()));
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    const double x = a * grid.step(k);
    const double decay = std::exp(-x);
    const double rise = one_minus_exp(x);
    const double ramp = numerics::ramp_weight(x);
    const auto j = static_cast<Eigen::Index>(k);
    out.col(j + 1) = decay * out.col(j) + rise * g.at(k + 1) - ramp * (g.at(k + 1) - g.at(k));
  }
  return SampledPath(grid, std::move(out));
}

SampledPath psi_weighted(const KernelParams& params, const SampledPath& g) {
  require_origin(g, "psi_weighted");
  if (!(g.grid().back() < 1.0)) throw DomainError("psi_weighted: grid must end before t = 1");
  const double a = params.rate();
  const auto& grid = g.grid();
  Mat out = Mat::Zero(g.dim(), static_cast<Eigen::Index>(g.size()));
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    const double h = grid.step(k);
    const double x = a * h;
    const double rise = one_minus_exp(x);
    const double r = std::exp(-a * (1.0 - grid[k + 1]));
    const double f1 = one_minus_exp(a * (1.0 - grid[k + 1]));
    const double f0 = one_minus_exp(a * (1.0 - grid[k]));
    if (!(f1 > 0.0)) throw NumericalError("psi_weighted: f^2 underflows at t = " + std::to_string(grid[k + 1]));
    // M0 = int a e^{-a(s1-s)} / f^2, M1 = int a e^{-a(s1-s)} (s1 - s) / f^2 over the cell.
    const double m0 = rise / (f1 * f0);
    const double ratio = r * rise / f1;
    const double log_term = ratio == 0.0 ? 1.0 : std::log1p(ratio) / ratio;
    const double m1 = rise / (a * f1) * log_term - h * std::exp(-x) / f0;
    const auto j = static_cast<Eigen::Index>(k);
    out.col(j + 1) = std::exp(-x) * out.col(j) + m0 * g.at(k + 1) - (m1 / h) * (g.at(k + 1) - g.at(k));
  }
  return SampledPath(grid, std::move(out));
}

}  // namespace sotlab
