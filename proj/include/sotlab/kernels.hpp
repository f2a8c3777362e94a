#pragma once

#include "sotlab/core.hpp"

namespace sotlab {

/// Mass m and friction gamma of the Langevin system; both strictly positive.
class KernelParams {
 public:
  KernelParams(double m, double gamma);

  double m() const noexcept { return m_; }
  double gamma() const noexcept { return gamma_; }
  /// Relaxation rate gamma / m.
  double rate() const noexcept { return gamma_ / m_; }

 private:
  double m_;
  double gamma_;
};

/// K(t) = (1 - exp(-gamma t / m)) / gamma.
double kernel_K(const KernelParams& params, double t);

/// f(t) = gamma K(1 - t) = 1 - exp(-gamma (1 - t) / m).
double kernel_f(const KernelParams& params, double t);

/// phi(t) = 1 - int_t^1 f(s)^2 ds, evaluated in closed form.
double kernel_phi(const KernelParams& params, double t);

/// Inverse of phi on [phi(0), 1]; |phi(result) - s| <= 1e-12.
double kernel_phi_inverse(const KernelParams& params, double s);

/// Psi(g)(t) = int_0^t (gamma/m) exp(-gamma (t - s)/m) g(s) ds for the piecewise-linear
/// interpolant of g. The grid must start at 0.
SampledPath psi_operator(const KernelParams& params, const SampledPath& g);

/// Psi(g / f^2) for piecewise-linear g, with the weight 1/f^2 integrated exactly.
/// The grid must start at 0 and end strictly before 1.
SampledPath psi_weighted(const KernelParams& params, const SampledPath& g);

}  // namespace sotlab
