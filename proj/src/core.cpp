#include "sotlab/core.hpp"

#include <algorithm>
#include <cmath>

namespace sotlab {

TimeGrid::TimeGrid(std::vector<double> nodes, double lo, double hi)
    : nodes_(std::move(nodes)), lo_(lo), hi_(hi) {
  if (!(lo_ < hi_)) throw DomainError("TimeGrid: interval must satisfy lo < hi");
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const double t = nodes_[k];
    if (!std::isfinite(t) || t < lo_ || t > hi_)
      throw DomainError("TimeGrid: node " + std::to_string(k) + " outside declared interval");
    if (k > 0 && !(nodes_[k - 1] < t))
      throw DomainError("TimeGrid: nodes must be strictly increasing");
  }
}

TimeGrid TimeGrid::uniform(std::size_t steps, double lo, double hi) {
  if (steps == 0) throw DomainError("TimeGrid::uniform: need at least one step");
  std::vector<double> nodes(steps + 1);
  const double width = hi - lo;
  for (std::size_t k = 0; k <= steps; ++k)
    nodes[k] = lo + width * (static_cast<double>(k) / static_cast<double>(steps));
  nodes.back() = hi;
  return TimeGrid(std::move(nodes), lo, hi);
}

std::size_t TimeGrid::find(double t) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t);
  if (it == nodes_.end() || *it != t) return npos;
  return static_cast<std::size_t>(it - nodes_.begin());
}

SampledPath::SampledPath(TimeGrid grid, Mat values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.cols()) != grid_.size())
    throw DomainError("SampledPath: values length must equal grid length");
  if (!values_.allFinite()) throw DomainError("SampledPath: non-finite entries");
}

SampledPath SampledPath::zeros(TimeGrid grid, Eigen::Index dim) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  return SampledPath(std::move(grid), Mat::Zero(dim, n));
}

double SampledPath::sup_norm() const {
  double best = 0.0;
  for (Eigen::Index k = 0; k < values_.cols(); ++k) best = std::max(best, values_.col(k).norm());
  return best;
}

}  // namespace sotlab
