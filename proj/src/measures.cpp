#include "sotlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

namespace sotlab {
namespace {

constexpr double kWeightTolerance = 1e-12;

std::vector<Eigen::Index> sorted_order(const Mat& points) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(points.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return points(0, a) < points(0, b); });
  return order;
}

double mean_pair_distance(const EmpiricalMeasure& p, const EmpiricalMeasure& q) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < q.size(); ++j) row += q.weight(j) * (p.point(i) - q.point(j)).norm();
    total += p.weight(i) * row;
  }
  return total;
}

// Transportation simplex on a dense n x k tableau; basis is a spanning tree of rows+columns.
class TransportSimplex {
 public:
  TransportSimplex(const Vec& supply, const Vec& demand, const Mat& cost)
      : n_(supply.size()), k_(demand.size()), cost_(cost), flow_(Mat::Zero(n_, k_)),
        basic_(n_, std::vector<bool>(static_cast<std::size_t>(k_), false)) {
    northwest_corner(supply, demand);
  }

  void solve() {
    const long max_pivots = 100000;
    for (long pivot = 0; pivot < max_pivots; ++pivot) {
      compute_duals();
      Eigen::Index enter_i = -1, enter_j = -1;
      for (Eigen::Index i = 0; i < n_ && enter_i < 0; ++i)
        for (Eigen::Index j = 0; j < k_; ++j)
          if (!basic_[i][j] && cost_(i, j) - row_dual_(i) - col_dual_(j) < -1e-12) {
            enter_i = i;
            enter_j = j;
            break;
          }
      if (enter_i < 0) return;
      pivot_on(enter_i, enter_j);
    }
    throw ConvergenceError("discrete_ot_exact: pivot limit reached", kInfinity, max_pivots);
  }

  const Mat& flow() const { return flow_; }

 private:
  void northwest_corner(const Vec& supply, const Vec& demand) {
    Vec rs = supply, cs = demand;
    Eigen::Index i = 0, j = 0;
    while (true) {
      const double amount = std::min(rs(i), cs(j));
      flow_(i, j) = amount;
      basic_[i][j] = true;
      rs(i) -= amount;
      cs(j) -= amount;
      if (i == n_ - 1 && j == k_ - 1) break;
      if (i == n_ - 1)
        ++j;
      else if (j == k_ - 1)
        ++i;
      else if (rs(i) <= cs(j))
        ++i;
      else
        ++j;
    }
  }

  // Potentials with row_dual(i) + col_dual(j) = cost(i, j) on basic cells.
  void compute_duals() {
    row_dual_ = Vec::Constant(n_, kInfinity);
    col_dual_ = Vec::Constant(k_, kInfinity);
    row_dual_(0) = 0.0;
    std::queue<Eigen::Index> pending;  // rows as i, columns as n + j
    pending.push(0);
    while (!pending.empty()) {
      const Eigen::Index node = pending.front();
      pending.pop();
      if (node < n_) {
        for (Eigen::Index j = 0; j < k_; ++j)
          if (basic_[node][j] && std::isinf(col_dual_(j))) {
            col_dual_(j) = cost_(node, j) - row_dual_(node);
            pending.push(n_ + j);
          }
      } else {
        const Eigen::Index j = node - n_;
        for (Eigen::Index i = 0; i < n_; ++i)
          if (basic_[i][j] && std::isinf(row_dual_(i))) {
            row_dual_(i) = cost_(i, j) - col_dual_(j);
            pending.push(i);
          }
      }
    }
  }

  // Path in the basis tree from row `from` to column `to`, as alternating cells.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> tree_path(Eigen::Index from_row, Eigen::Index to_col) const {
    const Eigen::Index nodes = n_ + k_;
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(nodes), -1);
    std::vector<bool> seen(static_cast<std::size_t>(nodes), false);
    std::queue<Eigen::Index> pending;
    pending.push(from_row);
    seen[from_row] = true;
    while (!pending.empty()) {
      const Eigen::Index node = pending.front();
      pending.pop();
      if (node == n_ + to_col) break;
      if (node < n_) {
        for (Eigen::Index j = 0; j < k_; ++j)
          if (basic_[node][j] && !seen[n_ + j]) {
            seen[n_ + j] = true;
            parent[n_ + j] = node;
            pending.push(n_ + j);
          }
      } else {
        const Eigen::Index j = node - n_;
        for (Eigen::Index i = 0; i < n_; ++i)
          if (basic_[i][j] && !seen[i]) {
            seen[i] = true;
            parent[i] = node;
            pending.push(i);
          }
      }
    }
    std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
    for (Eigen::Index node = n_ + to_col; node != from_row; node = parent[node]) {
      const Eigen::Index up = parent[node];
      if (node >= n_)
        cells.emplace_back(up, node - n_);
      else
        cells.emplace_back(node, up - n_);
    }
    std::reverse(cells.begin(), cells.end());
    return cells;
  }

  void pivot_on(Eigen::Index ei, Eigen::Index ej) {
    // Cycle: entering cell (+), then the tree path from row ei to column ej with signs -, +, -, ...
    const auto path = tree_path(ei, ej);
    double theta = kInfinity;
    std::size_t leave = path.size();
    for (std::size_t s = 0; s < path.size(); s += 2) {
      const double value = flow_(path[s].first, path[s].second);
      if (value < theta) {
        theta = value;
        leave = s;
      }
    }
    for (std::size_t s = 0; s < path.size(); ++s)
      flow_(path[s].first, path[s].second) += (s % 2 == 0 ? -theta : theta);
    flow_(ei, ej) = theta;
    basic_[ei][ej] = true;
    basic_[path[leave].first][path[leave].second] = false;
    flow_(path[leave].first, path[leave].second) = 0.0;
  }

  Eigen::Index n_, k_;
  const Mat& cost_;
  Mat flow_;
  std::vector<std::vector<bool>> basic_;
  Vec row_dual_, col_dual_;
};

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(Mat points, Vec weights) : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.cols() != weights_.size()) throw DomainError("EmpiricalMeasure: points and weights differ in length");
  if (points_.cols() == 0 || points_.rows() == 0) throw DomainError("EmpiricalMeasure: empty support");
  if (!points_.allFinite()) throw DomainError("EmpiricalMeasure: non-finite point");
  if (!weights_.allFinite() || (weights_.array() < 0.0).any())
    throw DomainError("EmpiricalMeasure: weights must be finite and nonnegative");
  if (std::abs(weights_.sum() - 1.0) > kWeightTolerance)
    throw DomainError("EmpiricalMeasure: weights must sum to 1");
}

EmpiricalMeasure EmpiricalMeasure::uniform(Mat points) {
  const auto n = points.cols();
  if (n == 0) throw DomainError("EmpiricalMeasure: empty support");
  return EmpiricalMeasure(std::move(points), Vec::Constant(n, 1.0 / static_cast<double>(n)));
}

Vec EmpiricalMeasure::mean() const { return points_ * weights_; }

double marginal_residual(const Mat& plan, const Vec& row_weights, const Vec& col_weights) {
  const double rows = (plan.rowwise().sum() - row_weights).lpNorm<1>();
  const double cols = (plan.colwise().sum().transpose() - col_weights).lpNorm<1>();
  return std::max(rows, cols);
}

DiscreteCoupling::DiscreteCoupling(EmpiricalMeasure source, EmpiricalMeasure target, Mat plan)
    : source_(std::move(source)), target_(std::move(target)), plan_(std::move(plan)) {
  if (plan_.rows() != source_.size() || plan_.cols() != target_.size())
    throw DomainError("DiscreteCoupling: plan shape does not match supports");
  if (!plan_.allFinite() || (plan_.array() < 0.0).any())
    throw DomainError("DiscreteCoupling: plan entries must be finite and nonnegative");
  if (marginal_residual() > kMarginalTolerance)
    throw DomainError("DiscreteCoupling: marginals violate tolerance");
}

double DiscreteCoupling::marginal_residual() const {
  return sotlab::marginal_residual(plan_, source_.weights(), target_.weights());
}

double relative_entropy(const DiscreteCoupling& mu, const DiscreteCoupling& nu) {
  if (mu.plan().rows() != nu.plan().rows() || mu.plan().cols() != nu.plan().cols() ||
      mu.source().points() != nu.source().points() || mu.target().points() != nu.target().points())
    throw DomainError("relative_entropy: couplings live on different supports");
  double total = 0.0;
  for (Eigen::Index i = 0; i < mu.plan().rows(); ++i)
    for (Eigen::Index j = 0; j < mu.plan().cols(); ++j) {
      const double a = mu.plan()(i, j);
      if (a <= 0.0) continue;
      const double b = nu.plan()(i, j);
      if (b <= 0.0) return kInfinity;
      total += a * std::log(a / b);
    }
  return std::max(total, 0.0);
}

double wasserstein2_squared_1d(const EmpiricalMeasure& p, const EmpiricalMeasure& q) {
  if (p.dim() != 1 || q.dim() != 1) throw UnsupportedError("wasserstein2_squared_1d: dimension must be 1");
  const auto op = sorted_order(p.points());
  const auto oq = sorted_order(q.points());
  std::size_t i = 0, j = 0;
  double left_p = p.weight(op[0]), left_q = q.weight(oq[0]);
  double total = 0.0;
  while (i < op.size() && j < oq.size()) {
    const double mass = std::min(left_p, left_q);
    const double gap = p.points()(0, op[i]) - q.points()(0, oq[j]);
    total += mass * gap * gap;
    left_p -= mass;
    left_q -= mass;
    // Advance whichever quantile block is exhausted; ties advance both.
    const bool next_p = left_p <= left_q;
    const bool next_q = left_q <= left_p;
    if (next_p && ++i < op.size()) left_p += p.weight(op[i]);
    if (next_q && ++j < oq.size()) left_q += q.weight(oq[j]);
  }
  return total;
}

TransportSolution discrete_ot_exact(const EmpiricalMeasure& p, const EmpiricalMeasure& q, const Mat& cost) {
  if (p.size() * q.size() > 64) throw SizeError("discrete_ot_exact: support-size product exceeds 64");
  if (cost.rows() != p.size() || cost.cols() != q.size())
    throw DomainError("discrete_ot_exact: cost shape does not match supports");
  if (!cost.allFinite()) throw DomainError("discrete_ot_exact: non-finite cost");
  Vec demand = q.weights();
  demand(demand.size() - 1) += p.weights().sum() - demand.sum();
  demand(demand.size() - 1) = std::max(demand(demand.size() - 1), 0.0);
  TransportSimplex simplex(p.weights(), demand, cost);
  simplex.solve();
  Mat plan = simplex.flow().cwiseMax(0.0);
  const double value = (plan.array() * cost.array()).sum();
  return {value, DiscreteCoupling(p, q, std::move(plan))};
}

double energy_distance(const EmpiricalMeasure& p, const EmpiricalMeasure& q) {
  if (p.dim() != q.dim()) throw DomainError("energy_distance: dimension mismatch");
  const double value = 2.0 * mean_pair_distance(p, q) - mean_pair_distance(p, p) - mean_pair_distance(q, q);
  return std::max(value, 0.0);
}

EmpiricalMeasure read_measure_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_measure_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("read_measure_csv: missing header in " + path.string());
  const auto columns = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') + 1);
  if (columns < 2 || line.rfind("weight") == std::string::npos)
    throw IoError("read_measure_csv: header must be x_1..x_d,weight in " + path.string());
  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream fields(line);
    std::string field;
    Eigen::Index count = 0;
    while (std::getline(fields, field, ',')) {
      try {
        values.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw IoError("read_measure_csv: bad number '" + field + "' in " + path.string());
      }
      ++count;
    }
    if (count != columns) throw IoError("read_measure_csv: ragged row in " + path.string());
    ++rows;
  }
  Mat points(columns - 1, rows);
  Vec weights(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c + 1 < columns; ++c) points(c, r) = values[static_cast<std::size_t>(r * columns + c)];
    weights(r) = values[static_cast<std::size_t>(r * columns + columns - 1)];
  }
  return EmpiricalMeasure(std::move(points), std::move(weights));
}

void write_measure_csv(const EmpiricalMeasure& measure, const std::filesystem::path& path) {
  std::FILE* out = std::fopen(path.string().c_str(), "w");
  if (!out) throw IoError("write_measure_csv: cannot open " + path.string());
  for (Eigen::Index c = 0; c < measure.dim(); ++c) std::fprintf(out, "x_%ld,", static_cast<long>(c + 1));
  std::fprintf(out, "weight\n");
  for (Eigen::Index i = 0; i < measure.size(); ++i) {
    for (Eigen::Index c = 0; c < measure.dim(); ++c) std::fprintf(out, "%.17g,", measure.points()(c, i));
    std::fprintf(out, "%.17g\n", measure.weight(i));
  }
  if (std::fclose(out) != 0) throw IoError("write_measure_csv: write failed for " + path.string());
}

}  // namespace sotlab
