#pragma once

#include "sotlab/core.hpp"
#include "sotlab/kernels.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sotlab {

/// Bounded nonnegative potential U(t, z) from the built-in registry.
class Potential {
 public:
  /// "zero", "bump" (scale exp(-|x|^2)), "cosine" (scale (1 + cos x_1)/2).
  static Potential from_name(const std::string& name, double scale = 1.0);

  const std::string& name() const noexcept { return name_; }
  double scale() const noexcept { return scale_; }
  double bound() const noexcept { return name_ == "zero" ? 0.0 : scale_; }
  /// z holds (x, y) with x the first half.
  double operator()(double t, const Vec& z) const;

 private:
  Potential(std::string name, double scale) : name_(std::move(name)), scale_(scale) {}
  std::string name_;
  double scale_;
};

enum class CostKind { kQuadratic, kPowerSum, kNonconvexProbe };

/// L(t, z; u) = L_1(u) + U(t, z).
///  quadratic:       L_1 = |u|^2 / 2
///  power_sum:       L_1 = sum_n a_n |u|^{p_n}, 2 <= p_1 < p_2 < ...
///  nonconvex_probe: L_1 = |u|^2 - |u|^p + 1, p in (0, 2)
class CostFunction {
 public:
  static CostFunction quadratic(Potential potential = Potential::from_name("zero"));
  static CostFunction power_sum(std::vector<double> coefficients, std::vector<double> exponents, double r0,
                                Potential potential = Potential::from_name("zero"));
  static CostFunction nonconvex_probe(double p);

  CostKind kind() const noexcept { return kind_; }
  std::string kind_name() const;
  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  const std::vector<double>& exponents() const noexcept { return exponents_; }
  double r0() const noexcept { return r0_; }
  const Potential& potential() const noexcept { return potential_; }

  /// L(t, z; u). z has 2d entries (x, y).
  double evaluate(double t, const Vec& z, const Vec& u) const;
  /// Control part L_1(|u|) as a function of the norm.
  double control_part(double norm) const;
  /// Lower bound for C_{1,R}: sum a_n R^{p_n - 1} (quadratic: R/2).
  double c1_lower(double radius) const;
  /// Constant C of the growth inequality for single-power costs; NaN when not known in closed form.
  double growth_constant() const;

 private:
  CostFunction(CostKind kind, std::vector<double> coefficients, std::vector<double> exponents, double r0,
               Potential potential);
  CostKind kind_;
  std::vector<double> coefficients_;
  std::vector<double> exponents_;
  double r0_;
  Potential potential_;
};

/// |u|^r, evaluated as the squared norm when r == 2.
double norm_power(const Vec& u, double r);

/// Trapezoid of t -> L(t, z(t); u(t)). state has 2d rows (x, y) or d rows (y taken as 0).
double action(const SampledPath& control, const SampledPath& state, const CostFunction& cost);

struct MonteCarloEstimate {
  double mean;
  double stderr;
};
/// Sample mean and standard error (n - 1 denominator; zero for a single value).
MonteCarloEstimate mc_value(std::span<const double> values);

struct SamplingSpec {
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  Eigen::Index dim = 1;
  double u_radius = 10.0;  ///< largest |u| sampled for Delta L and the inequalities
  double z_radius = 5.0;
};

struct DeltaLEstimate {
  double eps1;
  double eps2;
  double value;
};

struct AssumptionReport {
  std::vector<double> radii;
  std::vector<double> c1;
  std::vector<double> c2;
  std::vector<double> c_r0;
  double homogeneity_margin;  ///< worst normalized r^2 R1(u) - R1(r u)
  std::size_t homogeneity_violations;
  double growth_margin;  ///< worst normalized slack of the growth inequality
  double growth_constant;
  std::size_t growth_violations;
  std::vector<DeltaLEstimate> delta_l;
  bool convex;
  double convexity_margin;  ///< worst normalized midpoint slack
  std::size_t samples;
  double u_radius;
};

inline constexpr double kViolationTolerance = 1e-12;

/// Sampling-based falsification of the growth, homogeneity, convexity and continuity assumptions.
AssumptionReport check_assumptions(const CostFunction& cost, const SamplingSpec& spec,
                                   const std::vector<double>& radii,
                                   const std::vector<std::pair<double, double>>& epsilons);

/// Polynomial path X(t) = sum_k c_k t^k; coefficients stored column-wise (d x (degree + 1)).
struct PolynomialPath {
  Mat coefficients;
};

struct DeterministicIdentity {
  double lhs;           ///< int |gamma X' + m X''|^2
  double velocity;      ///< gamma^2 int |X'|^2
  double acceleration;  ///< m^2 int |X''|^2
  double boundary;      ///< gamma m (|X'(1)|^2 - |X'(0)|^2)
  double rhs() const { return velocity + acceleration + boundary; }
};

/// Both sides of int |gamma X' + m X''|^2 = gamma^2 int |X'|^2 + m^2 int |X''|^2 + gamma m [|X'|^2]_0^1,
/// integrated exactly in coefficient arithmetic. Degree above 10 is unsupported.
DeterministicIdentity deterministic_identity_check(const PolynomialPath& path, const KernelParams& params);

}  // namespace sotlab
