#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sotlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ----------------------------------------------------------------------------
// Errors
// ----------------------------------------------------------------------------

/// Input outside the domain where an operation is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Iterative solver ran out of iterations; carries the last residual.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual, long iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  long iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  long iterations_;
};

/// Explicit scheme would be unstable for the requested step.
class StabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Floating-point breakdown (underflow of all weights, indefinite covariance, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Instance exceeds the size an exact routine supports.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Request outside what an implementation supports (dimension, degree).
class UnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// ----------------------------------------------------------------------------
// Time grids and sampled paths
// ----------------------------------------------------------------------------

/// Strictly increasing nodes inside a declared interval [lo, hi] (default [0,1]).
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> nodes, double lo = 0.0, double hi = 1.0);

  /// n+1 equally spaced nodes on [lo, hi].
  static TimeGrid uniform(std::size_t steps, double lo = 0.0, double hi = 1.0);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  double operator[](std::size_t k) const { return nodes_[k]; }
  double front() const { return nodes_.front(); }
  double back() const { return nodes_.back(); }
  double step(std::size_t k) const { return nodes_[k + 1] - nodes_[k]; }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

  /// Index of a node equal to t (exact match), or npos.
  std::size_t find(double t) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) { return a.nodes_ == b.nodes_; }

 private:
  std::vector<double> nodes_;
  double lo_ = 0.0;
  double hi_ = 1.0;
};

/// Values of a d-dimensional path at every node of a grid, stored column-wise (d x n).
class SampledPath {
 public:
  SampledPath() = default;
  SampledPath(TimeGrid grid, Mat values);
  /// Zero path of dimension d on the grid.
  static SampledPath zeros(TimeGrid grid, Eigen::Index dim);

  const TimeGrid& grid() const noexcept { return grid_; }
  const Mat& values() const noexcept { return values_; }
  Mat& values() noexcept { return values_; }
  Eigen::Index dim() const noexcept { return values_.rows(); }
  std::size_t size() const noexcept { return grid_.size(); }
  auto at(std::size_t k) const { return values_.col(static_cast<Eigen::Index>(k)); }
  auto at(std::size_t k) { return values_.col(static_cast<Eigen::Index>(k)); }

  /// max_k |value_k| (Euclidean norm per node).
  double sup_norm() const;

 private:
  TimeGrid grid_;
  Mat values_;
};

}  // namespace sotlab
