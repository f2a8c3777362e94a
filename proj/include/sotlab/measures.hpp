#pragma once

#include "sotlab/core.hpp"

#include <filesystem>

namespace sotlab {

/// Weighted finite support: points stored column-wise (d x n), weights summing to 1.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  EmpiricalMeasure(Mat points, Vec weights);
  /// Equal weights 1/n.
  static EmpiricalMeasure uniform(Mat points);

  const Mat& points() const noexcept { return points_; }
  const Vec& weights() const noexcept { return weights_; }
  Eigen::Index dim() const noexcept { return points_.rows(); }
  Eigen::Index size() const noexcept { return points_.cols(); }
  auto point(Eigen::Index i) const { return points_.col(i); }
  double weight(Eigen::Index i) const { return weights_(i); }

  /// Weighted mean of the support points.
  Vec mean() const;

 private:
  Mat points_;
  Vec weights_;
};

/// Plan between two measures; row sums match source weights, column sums target weights.
class DiscreteCoupling {
 public:
  static constexpr double kMarginalTolerance = 1e-10;

  DiscreteCoupling(EmpiricalMeasure source, EmpiricalMeasure target, Mat plan);

  const EmpiricalMeasure& source() const noexcept { return source_; }
  const EmpiricalMeasure& target() const noexcept { return target_; }
  const Mat& plan() const noexcept { return plan_; }

  /// Largest L1 deviation of either marginal.
  double marginal_residual() const;

 private:
  EmpiricalMeasure source_;
  EmpiricalMeasure target_;
  Mat plan_;
};

/// Largest L1 deviation of the plan marginals from (row, col) weights.
double marginal_residual(const Mat& plan, const Vec& row_weights, const Vec& col_weights);

/// H(mu | nu) = sum mu log(mu / nu); +infinity when mu charges a nu-null cell.
double relative_entropy(const DiscreteCoupling& mu, const DiscreteCoupling& nu);

/// Squared 2-Wasserstein distance in dimension 1 via weighted quantile alignment.
double wasserstein2_squared_1d(const EmpiricalMeasure& p, const EmpiricalMeasure& q);

struct TransportSolution {
  double value;
  DiscreteCoupling coupling;
};

/// Exact optimal transport for tiny instances (support-size product <= 64).
TransportSolution discrete_ot_exact(const EmpiricalMeasure& p, const EmpiricalMeasure& q, const Mat& cost);

/// 2E|X-Y| - E|X-X'| - E|Y-Y'| by weighted double sums.
double energy_distance(const EmpiricalMeasure& p, const EmpiricalMeasure& q);

/// CSV with header x_1..x_d,weight.
EmpiricalMeasure read_measure_csv(const std::filesystem::path& path);
void write_measure_csv(const EmpiricalMeasure& measure, const std::filesystem::path& path);

}  // namespace sotlab
