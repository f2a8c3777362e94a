#include "sotlab/numerics.hpp"

#include "sotlab/core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

namespace sotlab::numerics {
namespace {

constexpr double kSeriesCutoff = 0.5;
constexpr int kSeriesTerms = 40;

// sum_{k>=start} coeff(k) * (-x)^k / k!, used below the cutoff only.
template <typename Coeff>
double alternating_series(double x, int start, Coeff coeff) {
  double term = 1.0;  // (-x)^k / k!
  for (int k = 1; k < start; ++k) term *= -x / k;
  double sum = 0.0;
  for (int k = start; k < start + kSeriesTerms; ++k) {
    term *= -x / k;
    sum += coeff(k) * term;
  }
  return sum;
}

}  // namespace

double one_minus_exp_over(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x;
  return one_minus_exp(x) / x;
}

double exp_defect(double x) {
  if (std::abs(x) < kSeriesCutoff) {
    // x - 1 + e^{-x} = sum_{k>=2} (-x)^k / k!
    return alternating_series(x, 2, [](int) { return 1.0; });
  }
  return x - one_minus_exp(x);
}

double ramp_weight(double x) {
  if (std::abs(x) < kSeriesCutoff) {
    // coefficient of (-x)^k/k! is -k/(k+1)
    return alternating_series(x, 1, [](int k) { return -static_cast<double>(k) / (k + 1); });
  }
  return one_minus_exp(x) / x - std::exp(-x);
}

double squared_kernel_integral(double x) {
  if (std::abs(x) < kSeriesCutoff) {
    // coefficient of (-x)^n/n! is -(2^{n-1} - 2)
    return alternating_series(x, 3, [](int n) { return -(std::ldexp(1.0, n - 1) - 2.0); });
  }
  return x - 2.0 * one_minus_exp(x) + 0.5 * one_minus_exp(2.0 * x);
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -kInfinity;
  const double peak = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

double golden_section_min(const std::function<double(double)>& fn, double lo, double hi, double tol,
                          int max_iter) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = fn(d);
    }
  }
  return fc <= fd ? c : d;
}

const HermiteRule& gauss_hermite(int n) {
  if (n < 1 || n > 512) throw DomainError("gauss_hermite: node count must be in [1, 512]");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<HermiteRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
      jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
      jacobi(k, k - 1) = jacobi(k - 1, k);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    auto rule = std::make_unique<HermiteRule>();
    rule->nodes.resize(n);
    rule->weights.resize(n);
    for (int k = 0; k < n; ++k) {
      rule->nodes[k] = solver.eigenvalues()(k);
      const double v0 = solver.eigenvectors()(0, k);
      rule->weights[k] = v0 * v0;
    }
    // Symmetrize: the rule is exactly symmetric about 0.
    for (int k = 0; k < n / 2; ++k) {
      const int j = n - 1 - k;
      const double node = 0.5 * (rule->nodes[j] - rule->nodes[k]);
      const double weight = 0.5 * (rule->weights[j] + rule->weights[k]);
      rule->nodes[k] = -node;
      rule->nodes[j] = node;
      rule->weights[k] = rule->weights[j] = weight;
    }
    if (n % 2 == 1) rule->nodes[n / 2] = 0.0;
    const double total = std::accumulate(rule->weights.begin(), rule->weights.end(), 0.0);
    for (double& w : rule->weights) w /= total;
    rule->log_weights.resize(n);
    for (int k = 0; k < n; ++k) rule->log_weights[k] = std::log(rule->weights[k]);
    slot = std::move(rule);
  }
  return *slot;
}

}  // namespace sotlab::numerics
