#pragma once

#include "sotlab/core.hpp"
#include "sotlab/kernels.hpp"
#include "sotlab/measures.hpp"
#include "sotlab/numerics.hpp"

#include <functional>
#include <string>

namespace sotlab {

/// Heat kernel g(t, x) = (2 pi t)^{-d/2} exp(-|x|^2 / (2t)).
double gaussian_density(double t, const Vec& x);
double log_gaussian_density(double t, const Vec& x);

/// Discrete Schroedinger potentials: plan_ij = w0_i w1_j G_ij exp(-u_i - v_j),
/// G_ij = g(1/gamma^2, y_j - x_i).
struct SinkhornPotentials {
  Vec source_potentials;  ///< u over the P0 support
  Vec target_potentials;  ///< v over the P1 support
  double gamma = 1.0;
  EmpiricalMeasure source;
  EmpiricalMeasure target;
  long iterations = 0;
  double residual = kInfinity;
  /// log(w1_j) - v_j, cached by sinkhorn(); refreshed by refresh_cache().
  Vec log_beta;

  void refresh_cache();

  /// Log of the Gibbs kernel entry G_ij.
  double log_kernel(Eigen::Index i, Eigen::Index j) const;
  Mat plan() const;
  DiscreteCoupling coupling() const;
};

inline constexpr double kSinkhornTolerance = 1e-10;
inline constexpr long kSinkhornMaxIterations = 100000;

/// Log-domain alternating projections; stops when the larger L1 marginal residual <= tol.
SinkhornPotentials sinkhorn(const EmpiricalMeasure& p0, const EmpiricalMeasure& p1, double gamma,
                            double tol = kSinkhornTolerance, long max_iter = kSinkhornMaxIterations);

/// Control of the m = 0 bridge: gamma (sum_j p_j y_j - x) / (1 - t), with
/// p_j proportional to exp(-v_j) w1_j exp(-gamma^2 |y_j - x|^2 / (2 (1 - t))).
Vec bridge_drift_m0(const SinkhornPotentials& pot, double t, const Vec& x);

/// log sum_j exp(-v_j) w1_j g((1 - t)/gamma^2, y_j - x); its x-gradient over gamma is the drift.
double bridge_log_potential(const SinkhornPotentials& pot, double t, const Vec& x);

/// Bounded smooth terminal reward f with gradient and declared sup-bound.
class TerminalReward {
 public:
  using Value = std::function<double(const Vec&)>;
  /// Writes the gradient at y into out, which arrives sized like y.
  using Gradient = std::function<void(const Vec& y, Vec& out)>;

  TerminalReward(std::string name, Value value, Gradient gradient, double bound, int nodes = 32);

  /// f == c.
  static TerminalReward constant(double c);
  /// f(y) = amplitude * mean_i cos(y_i).
  static TerminalReward cosine(double amplitude);
  /// f(y) = amplitude * exp(-|y - center|^2 / (2 width^2)).
  static TerminalReward gaussian_bump(double amplitude, Vec center, double width);
  /// Registry lookup: "constant", "cosine", "gaussian_bump".
  static TerminalReward from_name(const std::string& name, double amplitude, Eigen::Index dim);

  const std::string& name() const noexcept { return name_; }
  double bound() const noexcept { return bound_; }
  int nodes() const noexcept { return nodes_; }
  double operator()(const Vec& y) const;
  Vec gradient(const Vec& y) const {
    Vec out(y.size());
    gradient_(y, out);
    return out;
  }
  void gradient_into(const Vec& y, Vec& out) const { gradient_(y, out); }
  const numerics::HermiteRule& rule() const noexcept { return *rule_; }

 private:
  std::string name_;
  Value value_;
  Gradient gradient_;
  double bound_;
  int nodes_;
  const numerics::HermiteRule* rule_;
};

/// phi(t, x) = log E[exp f(x + sqrt(1 - t) Z / gamma)], Z standard normal in R^d.
double phi_value(const TerminalReward& reward, double gamma, double t, const Vec& x);
/// Gradient of phi in x, from the analytic derivative of the quadrature.
Vec phi_gradient(const TerminalReward& reward, double gamma, double t, const Vec& x);

/// psi(t, x, y) = phi(phi^m(t), x + K(1 - t) y).
double psi_m_value(const TerminalReward& reward, const KernelParams& params, double t, const Vec& x, const Vec& y);

/// D_y psi = K(1 - t) grad phi(phi^m(t), x + K(1 - t) y).
Vec optimal_control_m(const TerminalReward& reward, const KernelParams& params, double t, const Vec& x,
                      const Vec& y);

/// Central-difference residual of phi_t + (1/(2 gamma^2)) (lap phi + |grad phi|^2).
double hjb_residual_phi(const TerminalReward& reward, double gamma, double t, const Vec& x, double h);
/// Same assembly for an arbitrary function of (t, x); negative controls use it.
double hjb_residual_phi(const std::function<double(double, const Vec&)>& phi, double gamma, double t,
                        const Vec& x, double h);

/// Central-difference residual of psi_t + lap_y psi / 2 + <(D_x psi - gamma D_y psi)/m, y> + |D_y psi|^2 / 2.
double hjb_residual_psi(const TerminalReward& reward, const KernelParams& params, double t, const Vec& x,
                        const Vec& y, double h);

}  // namespace sotlab
