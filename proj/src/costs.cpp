#include "sotlab/costs.hpp"

#include "sotlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sotlab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Random vector with log-uniform norm in [lo, hi] and uniform direction.
Vec random_vector(RandomStream& rng, Eigen::Index d, double lo, double hi) {
  Vec dir(d);
  do {
    for (Eigen::Index c = 0; c < d; ++c) dir(c) = rng.normal();
  } while (dir.squaredNorm() == 0.0);
  const double norm = lo * std::exp(rng.uniform() * std::log(hi / lo));
  return norm * dir.normalized();
}

Vec random_state(RandomStream& rng, Eigen::Index d, double radius) {
  Vec z(2 * d);
  for (Eigen::Index c = 0; c < 2 * d; ++c) z(c) = radius * (2.0 * rng.uniform() - 1.0);
  return z;
}

// Coefficients of the k-th derivative.
Mat derivative(const Mat& coefficients) {
  if (coefficients.cols() <= 1) return Mat::Zero(coefficients.rows(), 1);
  Mat out(coefficients.rows(), coefficients.cols() - 1);
  for (Eigen::Index k = 0; k < out.cols(); ++k) out.col(k) = static_cast<double>(k + 1) * coefficients.col(k + 1);
  return out;
}

// int_0^1 <P(t), Q(t)> dt for vector polynomials.
double integral_of_product(const Mat& p, const Mat& q) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < p.cols(); ++j)
    for (Eigen::Index k = 0; k < q.cols(); ++k) total += p.col(j).dot(q.col(k)) / static_cast<double>(j + k + 1);
  return total;
}

Vec evaluate_polynomial(const Mat& coefficients, double t) {
  Vec acc = Vec::Zero(coefficients.rows());
  for (Eigen::Index k = coefficients.cols() - 1; k >= 0; --k) acc = acc * t + coefficients.col(k);
  return acc;
}

}  // namespace

Potential Potential::from_name(const std::string& name, double scale) {
  if (name != "zero" && name != "bump" && name != "cosine") throw ConfigError("unknown potential '" + name + "'");
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw ConfigError("potential scale must be finite and nonnegative");
  return Potential(name, scale);
}

double Potential::operator()(double, const Vec& z) const {
  if (name_ == "zero") return 0.0;
  const auto x = z.head(z.size() / 2);
  if (name_ == "bump") return scale_ * std::exp(-x.squaredNorm());
  return scale_ * 0.5 * (1.0 + std::cos(x(0)));
}

CostFunction::CostFunction(CostKind kind, std::vector<double> coefficients, std::vector<double> exponents, double r0,
                           Potential potential)
    : kind_(kind), coefficients_(std::move(coefficients)), exponents_(std::move(exponents)), r0_(r0),
      potential_(std::move(potential)) {}

CostFunction CostFunction::quadratic(Potential potential) {
  return CostFunction(CostKind::kQuadratic, {0.5}, {2.0}, 2.0, std::move(potential));
}

CostFunction CostFunction::power_sum(std::vector<double> coefficients, std::vector<double> exponents, double r0,
                                     Potential potential) {
  if (coefficients.empty() || coefficients.size() != exponents.size())
    throw ConfigError("power_sum: coefficients and exponents must be nonempty and equally long");
  if (std::none_of(coefficients.begin(), coefficients.end(), [](double a) { return a > 0.0; }))
    throw ConfigError("power_sum: at least one coefficient must be positive");
  for (std::size_t n = 0; n < coefficients.size(); ++n) {
    if (!(coefficients[n] >= 0.0) || !std::isfinite(coefficients[n]))
      throw ConfigError("power_sum: coefficients must be finite and nonnegative");
    if (!(exponents[n] >= 2.0) || !std::isfinite(exponents[n])) throw ConfigError("power_sum: exponents must be >= 2");
    if (n > 0 && !(exponents[n - 1] < exponents[n]))
      throw ConfigError("power_sum: exponents must be strictly increasing");
  }
  if (!(r0 >= 1.0)) throw ConfigError("power_sum: r0 must be >= 1");
  return CostFunction(CostKind::kPowerSum, std::move(coefficients), std::move(exponents), r0, std::move(potential));
}

CostFunction CostFunction::nonconvex_probe(double p) {
  if (!(p > 0.0 && p < 2.0)) throw ConfigError("nonconvex_probe: exponent must lie in (0, 2)");
  return CostFunction(CostKind::kNonconvexProbe, {1.0, -1.0}, {2.0, p}, 2.0, Potential::from_name("zero"));
}

std::string CostFunction::kind_name() const {
  switch (kind_) {
    case CostKind::kQuadratic: return "quadratic";
    case CostKind::kPowerSum: return "power_sum";
    case CostKind::kNonconvexProbe: return "nonconvex_probe";
  }
  return "unknown";
}

double norm_power(const Vec& u, double r) { return r == 2.0 ? u.squaredNorm() : std::pow(u.norm(), r); }

double CostFunction::evaluate(double t, const Vec& z, const Vec& u) const {
  if (z.size() != 2 * u.size()) throw DomainError("CostFunction::evaluate: z must have twice the dimension of u");
  double control = 0.0;
  switch (kind_) {
    case CostKind::kQuadratic: control = 0.5 * u.squaredNorm(); break;
    case CostKind::kPowerSum:
      for (std::size_t n = 0; n < coefficients_.size(); ++n) control += coefficients_[n] * norm_power(u, exponents_[n]);
      break;
    case CostKind::kNonconvexProbe: control = u.squaredNorm() - norm_power(u, exponents_[1]) + 1.0; break;
  }
  return control + potential_(t, z);
}

double CostFunction::control_part(double norm) const {
  Vec u(1);
  u(0) = norm;
  Vec z = Vec::Zero(2);
  return evaluate(0.0, z, u) - potential_(0.0, z);
}

double CostFunction::c1_lower(double radius) const {
  if (!(radius > 0.0)) throw DomainError("c1_lower: radius must be positive");
  switch (kind_) {
    case CostKind::kQuadratic: return 0.5 * radius;
    case CostKind::kPowerSum: {
      double total = 0.0;
      for (std::size_t n = 0; n < coefficients_.size(); ++n)
        total += coefficients_[n] * std::pow(radius, exponents_[n] - 1.0);
      return total;
    }
    case CostKind::kNonconvexProbe: {
      // inf over s >= R of (s^2 - s^p + 1)/s, scanned on a log grid out to 1e3 R
      double best = kInfinity;
      for (int k = 0; k <= 600; ++k) {
        const double s = radius * std::pow(10.0, k / 200.0);
        best = std::min(best, (s * s - std::pow(s, exponents_[1]) + 1.0) / s);
      }
      return best;
    }
  }
  return kNaN;
}

double CostFunction::growth_constant() const {
  switch (kind_) {
    case CostKind::kQuadratic: return 1.0;
    case CostKind::kPowerSum: {
      double total = 0.0;
      for (std::size_t n = 0; n < coefficients_.size(); ++n)
        total += coefficients_[n] * exponents_[n] * std::pow(2.0, exponents_[n] - 2.0);
      return total;
    }
    case CostKind::kNonconvexProbe: return kNaN;
  }
  return kNaN;
}

double action(const SampledPath& control, const SampledPath& state, const CostFunction& cost) {
  if (!(control.grid() == state.grid())) throw DomainError("action: control and state grids differ");
  const Eigen::Index d = control.dim();
  if (state.dim() != d && state.dim() != 2 * d) throw DomainError("action: state must have d or 2d rows");
  const auto& grid = control.grid();
  Vec z = Vec::Zero(2 * d);
  auto integrand = [&](std::size_t k) {
    z.head(state.dim()) = state.at(k);
    return cost.evaluate(grid[k], z, control.at(k));
  };
  double total = 0.0;
  double left = integrand(0);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double right = integrand(k + 1);
    total += 0.5 * grid.step(k) * (left + right);
    left = right;
  }
  return total;
}

MonteCarloEstimate mc_value(std::span<const double> values) {
  if (values.empty()) throw DomainError("mc_value: empty batch");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

AssumptionReport check_assumptions(const CostFunction& cost, const SamplingSpec& spec,
                                   const std::vector<double>& radii,
                                   const std::vector<std::pair<double, double>>& epsilons) {
  if (spec.samples < 1000) throw DomainError("check_assumptions: need at least 1000 samples per check");
  const Eigen::Index d = spec.dim;
  AssumptionReport report{};
  report.samples = spec.samples;
  report.u_radius = spec.u_radius;
  report.radii = radii;
  std::uint64_t tuple = 0;

  // Growth constants C_{r,R}: inf of L / |u|^r over |u| in [R, 100 R].
  for (double radius : radii) {
    double c1 = kInfinity, c2 = kInfinity, cr = kInfinity;
    for (std::size_t s = 0; s < spec.samples; ++s) {
      RandomStream rng(spec.seed, tuple++, Stream::kSampling);
      const double t = rng.uniform();
      const Vec z = random_state(rng, d, spec.z_radius);
      const Vec u = random_vector(rng, d, radius, 100.0 * radius);
      const double value = cost.evaluate(t, z, u);
      c1 = std::min(c1, value / norm_power(u, 1.0));
      c2 = std::min(c2, value / norm_power(u, 2.0));
      cr = std::min(cr, value / norm_power(u, cost.r0()));
    }
    report.c1.push_back(c1);
    report.c2.push_back(c2);
    report.c_r0.push_back(cr);
  }

  const double u_lo = 1e-3;
  report.homogeneity_margin = kInfinity;
  report.growth_margin = kInfinity;
  report.convexity_margin = kInfinity;
  report.growth_constant = cost.growth_constant();
  const bool growth_known = std::isfinite(report.growth_constant);
  for (std::size_t s = 0; s < spec.samples; ++s) {
    RandomStream rng(spec.seed, tuple++, Stream::kSampling);
    const double t = rng.uniform();
    const Vec z = random_state(rng, d, spec.z_radius);
    const Vec u = random_vector(rng, d, u_lo, spec.u_radius);
    const Vec v = random_vector(rng, d, u_lo, spec.u_radius);
    const double r = rng.uniform();
    const Vec zero = Vec::Zero(d);
    const double l0 = cost.evaluate(t, z, zero);
    const double lu = cost.evaluate(t, z, u);
    const double lv = cost.evaluate(t, z, v);

    // r^2 R1(u) - R1(r u) >= 0
    const double r1u = lu - l0;
    const double r1ru = cost.evaluate(t, z, (r * u).eval()) - l0;
    const double hom = (r * r * r1u - r1ru) / (1.0 + std::abs(r1u));
    report.homogeneity_margin = std::min(report.homogeneity_margin, hom);
    if (hom < -kViolationTolerance) ++report.homogeneity_violations;

    // L(u + v) <= L(u) + C |v| (|u|^{r0-1} + |v|^{r0-1})
    if (growth_known) {
      const double luv = cost.evaluate(t, z, (u + v).eval());
      const double bound = lu + report.growth_constant * v.norm() *
                                    (norm_power(u, cost.r0() - 1.0) + norm_power(v, cost.r0() - 1.0));
      const double slack = (bound - luv) / (1.0 + luv);
      report.growth_margin = std::min(report.growth_margin, slack);
      if (slack < -kViolationTolerance) ++report.growth_violations;
    }

    // midpoint convexity
    const double mid = cost.evaluate(t, z, (0.5 * (u + v)).eval());
    const double conv = (0.5 * (lu + lv) - mid) / (1.0 + std::max(lu, lv));
    report.convexity_margin = std::min(report.convexity_margin, conv);
  }
  if (!growth_known) report.growth_margin = 0.0;
  report.convex = report.convexity_margin >= -kViolationTolerance;

  // Delta L(eps1, eps2): sup (L(t1,z1;u) - L(t2,z2;u)) / (1 + L(t2,z2;u)); eps2 = inf means z unconstrained.
  for (const auto& [eps1, eps2] : epsilons) {
    double sup = -kInfinity;
    for (std::size_t s = 0; s < spec.samples; ++s) {
      RandomStream rng(spec.seed, tuple++, Stream::kSampling);
      const double t2 = rng.uniform();
      const double t1 = std::clamp(t2 + eps1 * (2.0 * rng.uniform() - 1.0), 0.0, 1.0);
      const Vec z2 = random_state(rng, d, spec.z_radius);
      Vec z1 = std::isinf(eps2) ? random_state(rng, d, spec.z_radius) : z2;
      if (!std::isinf(eps2)) {
        Vec step(2 * d);
        for (Eigen::Index c = 0; c < 2 * d; ++c) step(c) = rng.normal();
        z1 += (eps2 * rng.uniform() / std::max(step.norm(), 1e-300)) * step;
      }
      const Vec u = random_vector(rng, d, u_lo, spec.u_radius);
      const double base = cost.evaluate(t2, z2, u);
      sup = std::max(sup, (cost.evaluate(t1, z1, u) - base) / (1.0 + base));
    }
    report.delta_l.push_back({eps1, eps2, sup});
  }
  return report;
}

DeterministicIdentity deterministic_identity_check(const PolynomialPath& path, const KernelParams& params) {
  const Mat& c = path.coefficients;
  if (c.cols() < 1 || c.rows() < 1) throw DomainError("deterministic_identity_check: empty polynomial");
  if (c.cols() > 11) throw UnsupportedError("deterministic_identity_check: degree above 10 is unsupported");
  if (!c.allFinite()) throw DomainError("deterministic_identity_check: non-finite coefficient");
  const double m = params.m(), g = params.gamma();
  const Mat velocity = derivative(c);
  const Mat accel = derivative(velocity);
  DeterministicIdentity out{};
  // |g X' + m X''|^2 expanded; the cross term is integrated directly, not by parts.
  out.lhs = g * g * integral_of_product(velocity, velocity) + 2.0 * g * m * integral_of_product(velocity, accel) +
            m * m * integral_of_product(accel, accel);
  out.velocity = g * g * integral_of_product(velocity, velocity);
  out.acceleration = m * m * integral_of_product(accel, accel);
  out.boundary = g * m * (evaluate_polynomial(velocity, 1.0).squaredNorm() - evaluate_polynomial(velocity, 0.0).squaredNorm());
  return out;
}

}  // namespace sotlab
