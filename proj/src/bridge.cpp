#include "sotlab/bridge.hpp"

#include "sotlab/numerics.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace sotlab {
namespace {

void require_drift_time(double t, const char* who) {
  if (!(t >= 0.0 && t < 1.0)) throw DomainError(std::string(who) + ": t must lie in [0, 1)");
}

// Visits the tensor-product Gauss-Hermite nodes x + s z in R^d: fn(point, log weight).
template <typename Fn>
void for_each_node(const numerics::HermiteRule& rule, const Vec& x, double s, Fn fn) {
  const auto n = static_cast<int>(rule.nodes.size());
  const Eigen::Index d = x.size();
  std::vector<int> index(static_cast<std::size_t>(d), 0);
  Vec point(d);
  while (true) {
    double log_w = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) {
      point(c) = x(c) + s * rule.nodes[index[c]];
      log_w += rule.log_weights[index[c]];
    }
    fn(point, log_w);
    Eigen::Index c = 0;
    while (c < d && ++index[c] == n) index[c++] = 0;
    if (c == d) return;
  }
}

void require_quadrature_dimension(Eigen::Index d) {
  if (d < 1 || d > 3) throw UnsupportedError("phi_value: tensor quadrature supports 1 <= d <= 3");
}

}  // namespace

double log_gaussian_density(double t, const Vec& x) {
  if (!(t > 0.0)) throw DomainError("gaussian_density: t must be positive");
  const double d = static_cast<double>(x.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * t) - x.squaredNorm() / (2.0 * t);
}

double gaussian_density(double t, const Vec& x) { return std::exp(log_gaussian_density(t, x)); }

double SinkhornPotentials::log_kernel(Eigen::Index i, Eigen::Index j) const {
  return log_gaussian_density(1.0 / (gamma * gamma), target.point(j) - source.point(i));
}

Mat SinkhornPotentials::plan() const {
  Mat out(source.size(), target.size());
  for (Eigen::Index i = 0; i < source.size(); ++i)
    for (Eigen::Index j = 0; j < target.size(); ++j)
      out(i, j) = source.weight(i) * target.weight(j) *
                  std::exp(log_kernel(i, j) - source_potentials(i) - target_potentials(j));
  return out;
}

void SinkhornPotentials::refresh_cache() {
  log_beta = target.weights().array().log().matrix() - target_potentials;
}

DiscreteCoupling SinkhornPotentials::coupling() const { return DiscreteCoupling(source, target, plan()); }

SinkhornPotentials sinkhorn(const EmpiricalMeasure& p0, const EmpiricalMeasure& p1, double gamma, double tol,
                            long max_iter) {
  if (!(gamma > 0.0)) throw DomainError("sinkhorn: gamma must be positive");
  if (!(tol > 0.0)) throw DomainError("sinkhorn: tol must be positive");
  if (p0.dim() != p1.dim()) throw DomainError("sinkhorn: marginals differ in dimension");
  const Eigen::Index n0 = p0.size(), n1 = p1.size();
  SinkhornPotentials pot;
  pot.gamma = gamma;
  pot.source = p0;
  pot.target = p1;
  pot.source_potentials = Vec::Zero(n0);
  pot.target_potentials = Vec::Zero(n1);

  Mat log_g(n0, n1);
  for (Eigen::Index i = 0; i < n0; ++i)
    for (Eigen::Index j = 0; j < n1; ++j) log_g(i, j) = pot.log_kernel(i, j);
  const Vec log_w0 = p0.weights().array().log();
  const Vec log_w1 = p1.weights().array().log();

  Vec& u = pot.source_potentials;
  Vec& v = pot.target_potentials;
  std::vector<double> row(static_cast<std::size_t>(n1)), col(static_cast<std::size_t>(n0));
  Mat plan(n0, n1);
  for (long it = 1; it <= max_iter; ++it) {
    for (Eigen::Index i = 0; i < n0; ++i) {
      for (Eigen::Index j = 0; j < n1; ++j) row[j] = log_g(i, j) + log_w1(j) - v(j);
      u(i) = numerics::log_sum_exp(row);
    }
    for (Eigen::Index j = 0; j < n1; ++j) {
      for (Eigen::Index i = 0; i < n0; ++i) col[i] = log_g(i, j) + log_w0(i) - u(i);
      v(j) = numerics::log_sum_exp(col);
    }
    for (Eigen::Index i = 0; i < n0; ++i)
      for (Eigen::Index j = 0; j < n1; ++j) plan(i, j) = std::exp(log_g(i, j) + log_w0(i) + log_w1(j) - u(i) - v(j));
    pot.residual = marginal_residual(plan, p0.weights(), p1.weights());
    pot.iterations = it;
    if (!std::isfinite(pot.residual)) throw NumericalError("sinkhorn: non-finite marginal residual");
    if (pot.residual <= tol) {
      pot.refresh_cache();
      return pot;
    }
  }
  throw ConvergenceError("sinkhorn: max_iter exhausted with residual " + std::to_string(pot.residual),
                         pot.residual, max_iter);
}

double bridge_log_potential(const SinkhornPotentials& pot, double t, const Vec& x) {
  require_drift_time(t, "bridge_log_potential");
  const double var = (1.0 - t) / (pot.gamma * pot.gamma);
  std::vector<double> terms(static_cast<std::size_t>(pot.target.size()));
  for (Eigen::Index j = 0; j < pot.target.size(); ++j)
    terms[j] = -pot.target_potentials(j) + std::log(pot.target.weight(j)) +
               log_gaussian_density(var, pot.target.point(j) - x);
  return numerics::log_sum_exp(terms);
}

Vec bridge_drift_m0(const SinkhornPotentials& pot, double t, const Vec& x) {
  require_drift_time(t, "bridge_drift_m0");
  const double scale = pot.gamma * pot.gamma / (2.0 * (1.0 - t));
  const Mat& ys = pot.target.points();
  if (pot.log_beta.size() != ys.cols()) throw DomainError("bridge_drift_m0: potentials cache not initialized");
  const Vec& log_beta = pot.log_beta;
  auto logit = [&](Eigen::Index j) { return log_beta(j) - scale * (ys.col(j) - x).squaredNorm(); };
  double peak = -kInfinity;
  for (Eigen::Index j = 0; j < ys.cols(); ++j) peak = std::max(peak, logit(j));
  if (!std::isfinite(peak)) throw NumericalError("bridge_drift_m0: all target weights vanish");
  double mass = 0.0;
  Vec mean = Vec::Zero(x.size());
  for (Eigen::Index j = 0; j < ys.cols(); ++j) {
    const double p = std::exp(logit(j) - peak);
    mass += p;
    mean += p * ys.col(j);
  }
  return (pot.gamma / (1.0 - t)) * (mean / mass - x);
}

TerminalReward::TerminalReward(std::string name, Value value, Gradient gradient, double bound, int nodes)
    : name_(std::move(name)), value_(std::move(value)), gradient_(std::move(gradient)), bound_(bound), nodes_(nodes) {
  if (!(bound >= 0.0) || !std::isfinite(bound)) throw DomainError("TerminalReward: bound must be finite");
  if (nodes < 1) throw DomainError("TerminalReward: need at least one quadrature node");
  rule_ = &numerics::gauss_hermite(nodes);
}

TerminalReward TerminalReward::constant(double c) {
  return TerminalReward(
      "constant", [c](const Vec&) { return c; }, [](const Vec&, Vec& out) { out.setZero(); },
      std::abs(c));
}

TerminalReward TerminalReward::cosine(double amplitude) {
  return TerminalReward(
      "cosine", [amplitude](const Vec& y) { return amplitude * y.array().cos().mean(); },
      [amplitude](const Vec& y, Vec& out) {
        out = (-amplitude / static_cast<double>(y.size()) * y.array().sin()).matrix();
      },
      std::abs(amplitude));
}

TerminalReward TerminalReward::gaussian_bump(double amplitude, Vec center, double width) {
  if (!(width > 0.0)) throw DomainError("gaussian_bump: width must be positive");
  const double inv = 1.0 / (2.0 * width * width);
  return TerminalReward(
      "gaussian_bump",
      [=](const Vec& y) { return amplitude * std::exp(-inv * (y - center).squaredNorm()); },
      [=](const Vec& y, Vec& out) {
        out = -2.0 * inv * amplitude * std::exp(-inv * (y - center).squaredNorm()) * (y - center);
      },
      std::abs(amplitude));
}

TerminalReward TerminalReward::from_name(const std::string& name, double amplitude, Eigen::Index dim) {
  if (name == "constant") return constant(amplitude);
  if (name == "cosine") return cosine(amplitude);
  if (name == "gaussian_bump") return gaussian_bump(amplitude, Vec::Zero(dim), 1.0);
  throw DomainError("TerminalReward: unknown reward '" + name + "'");
}

double TerminalReward::operator()(const Vec& y) const {
  const double value = value_(y);
  if (!(std::abs(value) <= bound_ * (1.0 + 1e-12) + 1e-300))
    throw DomainError("TerminalReward '" + name_ + "': value exceeds declared bound");
  return value;
}

double phi_value(const TerminalReward& reward, double gamma, double t, const Vec& x) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("phi_value: t must lie in [0, 1]");
  if (!(gamma > 0.0)) throw DomainError("phi_value: gamma must be positive");
  if (t == 1.0) return reward(x);
  require_quadrature_dimension(x.size());
  const double s = std::sqrt(1.0 - t) / gamma;
  const auto& rule = reward.rule();
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(std::pow(rule.nodes.size(), x.size())));
  for_each_node(rule, x, s, [&](const Vec& point, double log_w) { terms.push_back(log_w + reward(point)); });
  return numerics::log_sum_exp(terms);
}

Vec phi_gradient(const TerminalReward& reward, double gamma, double t, const Vec& x) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("phi_gradient: t must lie in [0, 1]");
  if (!(gamma > 0.0)) throw DomainError("phi_gradient: gamma must be positive");
  if (t == 1.0) return reward.gradient(x);
  require_quadrature_dimension(x.size());
  const double s = std::sqrt(1.0 - t) / gamma;
  const auto& rule = reward.rule();
  // Softmax of log w + f over nodes; the shift is the reward bound, so no overflow.
  double mass = 0.0;
  Vec acc = Vec::Zero(x.size()), grad(x.size());
  for_each_node(rule, x, s, [&](const Vec& point, double log_w) {
    const double p = std::exp(log_w + reward(point) - reward.bound());
    mass += p;
    reward.gradient_into(point, grad);
    acc += p * grad;
  });
  return acc / mass;
}

double psi_m_value(const TerminalReward& reward, const KernelParams& params, double t, const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw DomainError("psi_m_value: x and y differ in dimension");
  return phi_value(reward, params.gamma(), kernel_phi(params, t), x + kernel_K(params, 1.0 - t) * y);
}

Vec optimal_control_m(const TerminalReward& reward, const KernelParams& params, double t, const Vec& x,
                      const Vec& y) {
  if (x.size() != y.size()) throw DomainError("optimal_control_m: x and y differ in dimension");
  const double k = kernel_K(params, 1.0 - t);
  if (k == 0.0) return Vec::Zero(x.size());
  return k * phi_gradient(reward, params.gamma(), kernel_phi(params, t), x + k * y);
}

double hjb_residual_phi(const std::function<double(double, const Vec&)>& phi, double gamma, double t,
                        const Vec& x, double h) {
  if (!(h > 0.0) || !(t - h > 0.0) || !(t + h < 1.0)) throw DomainError("hjb_residual_phi: stencil leaves (0, 1)");
  const double center = phi(t, x);
  const double dt = (phi(t + h, x) - phi(t - h, x)) / (2.0 * h);
  double laplacian = 0.0, grad_sq = 0.0;
  Vec shifted = x;
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    shifted(c) = x(c) + h;
    const double up = phi(t, shifted);
    shifted(c) = x(c) - h;
    const double down = phi(t, shifted);
    shifted(c) = x(c);
    laplacian += (up - 2.0 * center + down) / (h * h);
    const double grad = (up - down) / (2.0 * h);
    grad_sq += grad * grad;
  }
  return dt + (laplacian + grad_sq) / (2.0 * gamma * gamma);
}

double hjb_residual_phi(const TerminalReward& reward, double gamma, double t, const Vec& x, double h) {
  return hjb_residual_phi([&](double s, const Vec& z) { return phi_value(reward, gamma, s, z); }, gamma, t, x, h);
}

double hjb_residual_psi(const TerminalReward& reward, const KernelParams& params, double t, const Vec& x,
                        const Vec& y, double h) {
  if (!(h > 0.0) || !(t - h > 0.0) || !(t + h < 1.0)) throw DomainError("hjb_residual_psi: stencil leaves (0, 1)");
  auto psi = [&](double s, const Vec& px, const Vec& py) { return psi_m_value(reward, params, s, px, py); };
  const double center = psi(t, x, y);
  const double dt = (psi(t + h, x, y) - psi(t - h, x, y)) / (2.0 * h);
  double laplacian_y = 0.0, grad_y_sq = 0.0, transport = 0.0;
  Vec sx = x, sy = y;
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    sy(c) = y(c) + h;
    const double y_up = psi(t, x, sy);
    sy(c) = y(c) - h;
    const double y_down = psi(t, x, sy);
    sy(c) = y(c);
    sx(c) = x(c) + h;
    const double x_up = psi(t, sx, y);
    sx(c) = x(c) - h;
    const double x_down = psi(t, sx, y);
    sx(c) = x(c);
    const double dy = (y_up - y_down) / (2.0 * h);
    const double dx = (x_up - x_down) / (2.0 * h);
    laplacian_y += (y_up - 2.0 * center + y_down) / (h * h);
    grad_y_sq += dy * dy;
    transport += (dx - params.gamma() * dy) * y(c) / params.m();
  }
  return dt + 0.5 * laplacian_y + transport + 0.5 * grad_y_sq;
}

}  // namespace sotlab
