#pragma once

#include "sotlab/bridge.hpp"
#include "sotlab/config.hpp"
#include "sotlab/io.hpp"

#include <string>
#include <vector>

namespace sotlab {

/// One m of a zero-mass run. Deviations are sup over t_k <= t0 for each entry of t0_list.
struct ConvergenceRow {
  double m;
  double cost_mean;
  double cost_stderr;
  std::vector<double> sup_dev_X;
  std::vector<double> sup_dev_Y;
  double terminal_gap_max;
  double mean_abs_Y0;
  double mean_abs_Y0_stderr;
  double momentum_bound_C;
  double y0_moment;  ///< E|Y^m(0)|^{r0} of the initial momentum actually used
};

struct ZeroMassSummary {
  std::vector<ConvergenceRow> rows;
  double v0_mean;
  double v0_stderr;
  double discretization_margin;
  double monotone_fraction_X;  ///< at the last t0 of t0_list
  double monotone_fraction_Y;
  SinkhornPotentials potentials;
};

/// Index draw from a discrete law using one uniform.
Eigen::Index sample_index(const Vec& weights, double uniform);

ZeroMassSummary zero_mass_study(const ExperimentConfig& config, bool beta_variant);

ScenarioReport run_kernels_check(const ExperimentConfig& config);
ScenarioReport run_bridge_solve(const ExperimentConfig& config);
ScenarioReport run_zero_mass(const ExperimentConfig& config);
ScenarioReport run_zero_mass_beta(const ExperimentConfig& config);
ScenarioReport run_duality(const ExperimentConfig& config);
ScenarioReport run_marginal_check(const ExperimentConfig& config);
ScenarioReport run_deterministic(const ExperimentConfig& config);
ScenarioReport run_assumptions(const ExperimentConfig& config);

/// Dispatch on the registry names zero_mass, zero_mass_beta, duality, marginal, deterministic,
/// assumptions, kernels_check, bridge_solve.
ScenarioReport run_scenario(const std::string& name, const ExperimentConfig& config);

}  // namespace sotlab
