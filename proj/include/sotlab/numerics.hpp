#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace sotlab::numerics {

/// 1 - exp(-x), accurate for small x.
inline double one_minus_exp(double x) { return -std::expm1(-x); }

/// (1 - exp(-x)) / x, with the removable singularity at 0 filled in.
double one_minus_exp_over(double x);

/// x - (1 - exp(-x)) = x^2/2 - x^3/6 + ...
double exp_defect(double x);

/// (1 - exp(-x))/x - exp(-x) = x/2 - x^2/3 + ...
/// Weight of the slope term in the exact exponential integral of a linear ramp.
double ramp_weight(double x);

/// x - 2(1 - exp(-x)) + (1 - exp(-2x))/2 = x^3/3 - x^4/4 + ...
/// Equals a * gamma^2 * int_0^h K(s)^2 ds with x = a h.
double squared_kernel_integral(double x);

double log_sum_exp(std::span<const double> values);

/// Minimizes a unimodal function on [lo, hi]; returns the abscissa.
double golden_section_min(const std::function<double(double)>& fn, double lo, double hi,
                          double tol = 1e-12, int max_iter = 400);

/// Probabilists' Gauss-Hermite rule: sum_k w_k g(z_k) ~ E[g(Z)], Z ~ N(0,1); weights sum to 1.
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> log_weights;
};

/// Cached rule with n nodes (Golub-Welsch on the Jacobi matrix).
const HermiteRule& gauss_hermite(int n);

}  // namespace sotlab::numerics
