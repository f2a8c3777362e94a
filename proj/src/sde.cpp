#include "sotlab/sde.hpp"

#include "sotlab/numerics.hpp"
#include "sotlab/rng.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace sotlab {
namespace {

void validate_inputs(const SDEConfig& config, const Vec& x0, const TimeGrid& grid, const char* who) {
  if (x0.size() != config.dim()) throw DomainError(std::string(who) + ": x0 dimension mismatch");
  if (!x0.allFinite()) throw DomainError(std::string(who) + ": non-finite x0");
  if (grid.size() < 2) throw DomainError(std::string(who) + ": grid needs at least two nodes");
}

// Evaluates the control at node k, reusing the previous value past the guard.
class ControlSampler {
 public:
  ControlSampler(const DriftField& drift, Eigen::Index dim) : drift_(drift), last_(Vec::Zero(dim)) {}

  const Vec& at(double t, const Vec& x, const Vec& y) {
    if (t < 1.0 - kDriftGuard || !primed_) {
      if (t < 1.0 - kDriftGuard) last_ = drift_(t, x, y);
      primed_ = true;
      if (!last_.allFinite()) throw NumericalError("drift returned non-finite value at t = " + std::to_string(t));
    }
    return last_;
  }

 private:
  const DriftField& drift_;
  Vec last_;
  bool primed_ = false;
};

Trajectory allocate(const TimeGrid& grid, Eigen::Index d, bool momentum, std::uint64_t seed, std::uint64_t path) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Trajectory traj;
  traj.grid = grid;
  traj.X = Mat::Zero(d, n);
  traj.Y = momentum ? Mat::Zero(d, n) : Mat(d, 0);
  traj.u = Mat::Zero(d, n);
  traj.dW = Mat::Zero(d, n - 1);
  traj.seed = seed;
  traj.path = path;
  return traj;
}

}  // namespace

SDEConfig::SDEConfig(KernelParams p, Mat s) : params(p), sigma(std::move(s)) {
  if (sigma.rows() < 1 || sigma.rows() != sigma.cols()) throw DomainError("SDEConfig: sigma must be square, d >= 1");
  if (!sigma.allFinite()) throw DomainError("SDEConfig: sigma entries must be finite");
}

SDEConfig SDEConfig::identity(KernelParams params, Eigen::Index dim) {
  return SDEConfig(params, Mat::Identity(dim, dim));
}

DriftField zero_drift(Eigen::Index dim) {
  return [dim](double, const Vec&, const Vec&) { return Vec::Zero(dim).eval(); };
}

DriftField constant_drift(Vec c) {
  return [c = std::move(c)](double, const Vec&, const Vec&) { return c; };
}

StepCovariance exact_step_covariance(const KernelParams& params, double h) {
  const double a = params.rate(), g = params.gamma();
  const double x = a * h;
  StepCovariance cov{};
  cov.var_b = h;
  cov.cov_bx = numerics::exp_defect(x) / (g * a);
  cov.var_x = numerics::squared_kernel_integral(x) / (g * g * a);
  // Both series are accurate near 0; the difference loses at most a factor ~4 (x^3/3 vs x^3/12).
  const double ed = numerics::exp_defect(x);
  cov.schur = (numerics::squared_kernel_integral(x) - ed * ed / x) / (g * g * a);
  return cov;
}

Trajectory simulate_underdamped_euler(const SDEConfig& config, const DriftField& drift, const Vec& x0,
                                      const Vec& y0, const TimeGrid& grid, std::uint64_t seed,
                                      std::uint64_t path) {
  validate_inputs(config, x0, grid, "simulate_underdamped_euler");
  if (y0.size() != config.dim() || !y0.allFinite()) throw DomainError("simulate_underdamped_euler: bad y0");
  const double a = config.params.rate(), m = config.params.m();
  for (std::size_t k = 0; k + 1 < grid.size(); ++k)
    if (a * grid.step(k) > 10.0)
      throw StabilityError("simulate_underdamped_euler: gamma*step/m = " + std::to_string(a * grid.step(k)) +
                           " exceeds 10; use simulate_underdamped_exact");
  const Eigen::Index d = config.dim();
  Trajectory traj = allocate(grid, d, true, seed, path);
  traj.X.col(0) = x0;
  traj.Y.col(0) = y0;
  RandomStream rng(seed, path, Stream::kBrownian);
  ControlSampler control(drift, d);
  Vec noise(d);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(k);
    const double h = grid.step(k);
    const Vec x = traj.X.col(j), y = traj.Y.col(j);
    traj.u.col(j) = control.at(grid[k], x, y);
    for (Eigen::Index c = 0; c < d; ++c) noise(c) = std::sqrt(h) * rng.normal();
    traj.dW.col(j) = noise;
    traj.X.col(j + 1) = x + (h / m) * y;
    traj.Y.col(j + 1) = y + h * (traj.u.col(j) - a * y) + config.sigma * noise;
  }
  const auto last = static_cast<Eigen::Index>(grid.size()) - 1;
  traj.u.col(last) = control.at(grid.back(), traj.X.col(last), traj.Y.col(last));
  return traj;
}

Trajectory simulate_underdamped_exact(const SDEConfig& config, const DriftField& drift, const Vec& x0,
                                      const Vec& y0, const TimeGrid& grid, std::uint64_t seed,
                                      std::uint64_t path) {
  validate_inputs(config, x0, grid, "simulate_underdamped_exact");
  if (y0.size() != config.dim() || !y0.allFinite()) throw DomainError("simulate_underdamped_exact: bad y0");
  const double a = config.params.rate(), g = config.params.gamma();
  const Eigen::Index d = config.dim();
  Trajectory traj = allocate(grid, d, true, seed, path);
  traj.X.col(0) = x0;
  traj.Y.col(0) = y0;
  RandomStream rng(seed, path, Stream::kBrownian);
  ControlSampler control(drift, d);
  Vec b(d), ix(d);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(k);
    const double h = grid.step(k);
    const double x = a * h;
    const double decay = std::exp(-x);
    const double rise = numerics::one_minus_exp(x);
    const StepCovariance cov = exact_step_covariance(config.params, h);
    if (cov.schur < -1e-14 * cov.var_x || !(cov.var_b > 0.0))
      throw NumericalError("simulate_underdamped_exact: indefinite step covariance (var_b=" +
                           std::to_string(cov.var_b) + ", cov=" + std::to_string(cov.cov_bx) +
                           ", var_x=" + std::to_string(cov.var_x) + ", h=" + std::to_string(h) + ")");
    const double l11 = std::sqrt(cov.var_b);
    const double l21 = cov.cov_bx / l11;
    const double l22 = std::sqrt(std::max(cov.schur, 0.0));
    for (Eigen::Index c = 0; c < d; ++c) {
      const double z1 = rng.normal();
      const double z2 = rng.normal();
      b(c) = l11 * z1;
      ix(c) = l21 * z1 + l22 * z2;
    }
    const Vec xk = traj.X.col(j), yk = traj.Y.col(j);
    const Vec& u = control.at(grid[k], xk, yk);
    traj.u.col(j) = u;
    traj.dW.col(j) = b;
    const Vec iy = b - g * ix;
    traj.Y.col(j + 1) = decay * yk + (rise / a) * u + config.sigma * iy;
    traj.X.col(j + 1) = xk + (rise / g) * yk + (numerics::exp_defect(x) / (g * a)) * u + config.sigma * ix;
  }
  const auto last = static_cast<Eigen::Index>(grid.size()) - 1;
  traj.u.col(last) = control.at(grid.back(), traj.X.col(last), traj.Y.col(last));
  return traj;
}

Trajectory simulate_overdamped(const SDEConfig& config, const DriftField& drift, const Vec& x0,
                               const TimeGrid& grid, std::uint64_t seed, std::uint64_t path) {
  validate_inputs(config, x0, grid, "simulate_overdamped");
  const double g = config.params.gamma();
  const Eigen::Index d = config.dim();
  Trajectory traj = allocate(grid, d, false, seed, path);
  traj.X.col(0) = x0;
  RandomStream rng(seed, path, Stream::kBrownian);
  ControlSampler control(drift, d);
  const Vec no_momentum;
  Vec noise(d);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(k);
    const double h = grid.step(k);
    const Vec x = traj.X.col(j);
    traj.u.col(j) = control.at(grid[k], x, no_momentum);
    for (Eigen::Index c = 0; c < d; ++c) noise(c) = std::sqrt(h) * rng.normal();
    traj.dW.col(j) = noise;
    traj.X.col(j + 1) = x + (h / g) * traj.u.col(j) + (config.sigma * noise) / g;
  }
  const auto last = static_cast<Eigen::Index>(grid.size()) - 1;
  traj.u.col(last) = control.at(grid.back(), traj.X.col(last), no_momentum);
  return traj;
}

std::pair<SampledPath, SampledPath> decompose(const Trajectory& traj, const SDEConfig& config) {
  const auto n = static_cast<Eigen::Index>(traj.grid.size());
  if (traj.u.cols() != n) throw DomainError("decompose: trajectory has no control samples");
  if (traj.dW.cols() != n - 1) throw DomainError("decompose: trajectory has no noise increments");
  if (traj.dW.rows() != config.dim()) throw DomainError("decompose: noise dimension mismatch");
  Mat U = Mat::Zero(traj.dim(), n), M = Mat::Zero(traj.dim(), n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double h = traj.grid.step(static_cast<std::size_t>(k));
    U.col(k + 1) = U.col(k) + 0.5 * h * (traj.u.col(k) + traj.u.col(k + 1));
    M.col(k + 1) = M.col(k) + config.sigma * traj.dW.col(k);
  }
  return {SampledPath(traj.grid, std::move(U)), SampledPath(traj.grid, std::move(M))};
}

double reconstruction_residual(const Trajectory& traj, const SDEConfig& config) {
  if (!traj.has_momentum()) throw DomainError("reconstruction_residual: trajectory has no momentum");
  auto [U, M] = decompose(traj, config);
  Mat g = U.values() + M.values();
  g.colwise() += traj.Y.col(0);
  const SampledPath psi = psi_operator(config.params, SampledPath(traj.grid, std::move(g)));
  double worst = 0.0;
  for (Eigen::Index k = 0; k < traj.X.cols(); ++k) {
    const Vec r = traj.X.col(k) - traj.X.col(0) - psi.values().col(k) / config.params.gamma();
    worst = std::max(worst, r.norm());
  }
  return worst;
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::FILE* out = std::fopen(path.string().c_str(), "w");
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const Eigen::Index d = traj.dim();
  std::fputs("t", out);
  for (Eigen::Index c = 0; c < d; ++c) std::fprintf(out, ",x_%ld", static_cast<long>(c + 1));
  if (traj.has_momentum())
    for (Eigen::Index c = 0; c < d; ++c) std::fprintf(out, ",y_%ld", static_cast<long>(c + 1));
  for (Eigen::Index c = 0; c < d; ++c) std::fprintf(out, ",u_%ld", static_cast<long>(c + 1));
  std::fputc('\n', out);
  for (std::size_t k = 0; k < traj.grid.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    std::fprintf(out, "%.17g", traj.grid[k]);
    for (Eigen::Index c = 0; c < d; ++c) std::fprintf(out, ",%.17g", traj.X(c, kk));
    if (traj.has_momentum())
      for (Eigen::Index c = 0; c < d; ++c) std::fprintf(out, ",%.17g", traj.Y(c, kk));
    for (Eigen::Index c = 0; c < d; ++c) std::fprintf(out, ",%.17g", traj.u(c, kk));
    std::fputc('\n', out);
  }
  if (std::fclose(out) != 0) throw IoError("write failed for " + path.string());
}

}  // namespace sotlab
