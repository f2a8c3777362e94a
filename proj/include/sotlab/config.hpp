#pragma once

#include "sotlab/costs.hpp"
#include "sotlab/measures.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sotlab {

/// Marginal law: "gaussian:MEAN:VARIANCE" (1-d, quantile-discretized), "point:X", or "csv:PATH".
struct MarginalSpec {
  std::string text = "gaussian:0:1";

  /// Discretized support with `support_size` equal-weight points for Gaussians.
  EmpiricalMeasure resolve(Eigen::Index support_size) const;
};

/// Flat `key = value` configuration. Defaults describe the zero-mass flagship run.
struct ExperimentConfig {
  std::string scenario = "zero_mass";
  MarginalSpec p0{"gaussian:0:1"};
  MarginalSpec p1{"gaussian:1:0.25"};
  Eigen::Index support_size = 64;
  double gamma = 1.0;
  std::vector<double> m_grid{0.2, 0.1, 0.05, 0.02};
  double eps0 = 0.4;
  std::size_t paths = 4096;
  std::size_t grid = 2048;
  std::uint64_t seed = 20240611;
  unsigned threads = 1;
  std::filesystem::path out = "out";

  // cost descriptor
  std::string cost = "quadratic";
  std::vector<double> cost_coefficients{1.0};
  std::vector<double> cost_exponents{2.0};
  double cost_r0 = 2.0;
  std::string potential = "zero";
  double potential_scale = 1.0;
  double probe_exponent = 1.0;

  // tolerances
  double sinkhorn_tol = 1e-10;
  long sinkhorn_max_iter = 100000;
  double sigma_multiplier = 3.0;
  double monotone_fraction = 0.95;
  double terminal_gap_tol = 1e-12;
  double w2_threshold = 0.01;
  double energy_threshold = 0.01;
  std::vector<double> t0_list{0.5, 0.9};

  // zero_mass_beta
  std::string y0_law = "sqrt_m_gaussian";  ///< sqrt_m_gaussian | matched | zero

  // duality
  std::string reward = "cosine";
  double reward_amplitude = 0.5;
  double duality_m = 0.1;
  std::size_t duality_paths = 10000;
  std::size_t duality_grid = 512;
  MarginalSpec duality_p0_alt{"gaussian:2:0.25"};
  double y_star = 0.3;
  double control_scale = 0.5;
  double hjb_h = 0.01;
  double hjb_constant = 100.0;
  std::size_t hjb_points = 50;

  // deterministic / assumptions
  std::size_t identity_paths = 20;
  double identity_tol = 1e-10;
  std::size_t assumption_samples = 10000;
  double u_radius = 10.0;

  CostFunction make_cost() const;
  /// Throws ConfigError when an invariant fails (m-grid order and cap, N, power-of-two grid).
  void validate() const;
};

/// Parses `key = value` lines; `#` starts a comment; unknown keys are errors.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Echo of every key as strings, for metadata.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config);

}  // namespace sotlab
