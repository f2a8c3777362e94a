#include "sotlab/config.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace sotlab {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, sep)) parts.push_back(trim(part));
  return parts;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long out = std::stoull(value, &used);
    if (used != value.size() || value.front() == '-') throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a nonnegative integer, got '" + value + "'");
  }
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& part : split(value, ',')) out.push_back(to_double(key, part));
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

std::string show(double x) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", x);
  return buffer;
}

std::string show(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + show(xs[i]);
  return out;
}

struct Key {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define SOTLAB_STRING(field)                                                              \
  Key {                                                                                   \
    #field, [](ExperimentConfig& c, const std::string& v) { c.field = v; },               \
        [](const ExperimentConfig& c) { return std::string(c.field); }                    \
  }
#define SOTLAB_MARGINAL(field)                                                            \
  Key {                                                                                   \
    #field, [](ExperimentConfig& c, const std::string& v) { c.field.text = v; },          \
        [](const ExperimentConfig& c) { return c.field.text; }                            \
  }
#define SOTLAB_DOUBLE(field)                                                              \
  Key {                                                                                   \
    #field, [](ExperimentConfig& c, const std::string& v) { c.field = to_double(#field, v); }, \
        [](const ExperimentConfig& c) { return show(c.field); }                           \
  }
#define SOTLAB_UNSIGNED(field, type)                                                      \
  Key {                                                                                   \
    #field, [](ExperimentConfig& c, const std::string& v) { c.field = static_cast<type>(to_unsigned(#field, v)); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }                 \
  }
#define SOTLAB_LIST(field)                                                                \
  Key {                                                                                   \
    #field, [](ExperimentConfig& c, const std::string& v) { c.field = to_list(#field, v); }, \
        [](const ExperimentConfig& c) { return show(c.field); }                           \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      SOTLAB_STRING(scenario),
      SOTLAB_MARGINAL(p0),
      SOTLAB_MARGINAL(p1),
      SOTLAB_UNSIGNED(support_size, Eigen::Index),
      SOTLAB_DOUBLE(gamma),
      SOTLAB_LIST(m_grid),
      SOTLAB_DOUBLE(eps0),
      SOTLAB_UNSIGNED(paths, std::size_t),
      SOTLAB_UNSIGNED(grid, std::size_t),
      SOTLAB_UNSIGNED(seed, std::uint64_t),
      SOTLAB_UNSIGNED(threads, unsigned),
      Key{"out", [](ExperimentConfig& c, const std::string& v) { c.out = v; },
          [](const ExperimentConfig& c) { return c.out.string(); }},
      SOTLAB_STRING(cost),
      SOTLAB_LIST(cost_coefficients),
      SOTLAB_LIST(cost_exponents),
      SOTLAB_DOUBLE(cost_r0),
      SOTLAB_STRING(potential),
      SOTLAB_DOUBLE(potential_scale),
      SOTLAB_DOUBLE(probe_exponent),
      SOTLAB_DOUBLE(sinkhorn_tol),
      SOTLAB_UNSIGNED(sinkhorn_max_iter, long),
      SOTLAB_DOUBLE(sigma_multiplier),
      SOTLAB_DOUBLE(monotone_fraction),
      SOTLAB_DOUBLE(terminal_gap_tol),
      SOTLAB_DOUBLE(w2_threshold),
      SOTLAB_DOUBLE(energy_threshold),
      SOTLAB_LIST(t0_list),
      SOTLAB_STRING(y0_law),
      SOTLAB_STRING(reward),
      SOTLAB_DOUBLE(reward_amplitude),
      SOTLAB_DOUBLE(duality_m),
      SOTLAB_UNSIGNED(duality_paths, std::size_t),
      SOTLAB_UNSIGNED(duality_grid, std::size_t),
      SOTLAB_MARGINAL(duality_p0_alt),
      SOTLAB_DOUBLE(y_star),
      SOTLAB_DOUBLE(control_scale),
      SOTLAB_DOUBLE(hjb_h),
      SOTLAB_DOUBLE(hjb_constant),
      SOTLAB_UNSIGNED(hjb_points, std::size_t),
      SOTLAB_UNSIGNED(identity_paths, std::size_t),
      SOTLAB_DOUBLE(identity_tol),
      SOTLAB_UNSIGNED(assumption_samples, std::size_t),
      SOTLAB_DOUBLE(u_radius),
  };
  return table;
}

#undef SOTLAB_STRING
#undef SOTLAB_MARGINAL
#undef SOTLAB_DOUBLE
#undef SOTLAB_UNSIGNED
#undef SOTLAB_LIST

}  // namespace

EmpiricalMeasure MarginalSpec::resolve(Eigen::Index support_size) const {
  const auto parts = split(text, ':');
  if (parts.empty()) throw ConfigError("empty marginal specification");
  const std::string& kind = parts[0];
  if (kind == "gaussian") {
    if (parts.size() != 3) throw ConfigError("marginal '" + text + "': expected gaussian:MEAN:VARIANCE");
    const double mean = to_double("marginal", parts[1]);
    const double variance = to_double("marginal", parts[2]);
    if (!(variance > 0.0)) throw ConfigError("marginal '" + text + "': variance must be positive");
    if (support_size < 1) throw ConfigError("support_size must be positive");
    const boost::math::normal_distribution<double> law(mean, std::sqrt(variance));
    Mat points(1, support_size);
    for (Eigen::Index i = 0; i < support_size; ++i)
      points(0, i) = boost::math::quantile(law, (static_cast<double>(i) + 0.5) / static_cast<double>(support_size));
    return EmpiricalMeasure::uniform(std::move(points));
  }
  if (kind == "point") {
    if (parts.size() < 2) throw ConfigError("marginal '" + text + "': expected point:X[:X2...]");
    Mat points(static_cast<Eigen::Index>(parts.size() - 1), 1);
    for (std::size_t c = 1; c < parts.size(); ++c) points(static_cast<Eigen::Index>(c - 1), 0) = to_double("marginal", parts[c]);
    return EmpiricalMeasure::uniform(std::move(points));
  }
  if (kind == "csv") {
    if (parts.size() < 2) throw ConfigError("marginal '" + text + "': expected csv:PATH");
    return read_measure_csv(text.substr(4));
  }
  throw ConfigError("marginal '" + text + "': unknown kind '" + kind + "'");
}

CostFunction ExperimentConfig::make_cost() const {
  const Potential u = Potential::from_name(potential, potential_scale);
  if (cost == "quadratic") return CostFunction::quadratic(u);
  if (cost == "power_sum") return CostFunction::power_sum(cost_coefficients, cost_exponents, cost_r0, u);
  if (cost == "nonconvex_probe") return CostFunction::nonconvex_probe(probe_exponent);
  throw ConfigError("unknown cost kind '" + cost + "'");
}

void ExperimentConfig::validate() const {
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (m_grid.empty()) throw ConfigError("m_grid must not be empty");
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    if (!(m_grid[i] > 0.0)) throw ConfigError("m_grid entries must be positive");
    if (i > 0 && !(m_grid[i] < m_grid[i - 1])) throw ConfigError("m_grid must be strictly decreasing");
  }
  if (!(eps0 > 0.0)) throw ConfigError("eps0 must be positive");
  if (m_grid.front() > eps0 * gamma / 2.0 * (1.0 + 1e-12))
    throw ConfigError("m_grid entries must not exceed eps0 * gamma / 2 = " + show(eps0 * gamma / 2.0));
  if (paths < 100) throw ConfigError("paths must be at least 100");
  if (grid < 2 || (grid & (grid - 1)) != 0) throw ConfigError("grid must be a power of two");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (!(sinkhorn_tol > 0.0) || sinkhorn_max_iter < 1) throw ConfigError("sinkhorn tolerances must be positive");
  if (!(duality_m > 0.0)) throw ConfigError("duality_m must be positive");
  if (duality_paths < 100) throw ConfigError("duality_paths must be at least 100");
  if (duality_grid < 2 || (duality_grid & (duality_grid - 1)) != 0) throw ConfigError("duality_grid must be a power of two");
  if (!(hjb_h > 0.0 && hjb_h < 0.05)) throw ConfigError("hjb_h must lie in (0, 0.05)");
  if (!(monotone_fraction >= 0.0 && monotone_fraction <= 1.0)) throw ConfigError("monotone_fraction must lie in [0, 1]");
  for (double t0 : t0_list)
    if (!(t0 > 0.0 && t0 < 1.0)) throw ConfigError("t0_list entries must lie in (0, 1)");
  if (y0_law != "sqrt_m_gaussian" && y0_law != "matched" && y0_law != "zero")
    throw ConfigError("y0_law must be sqrt_m_gaussian, matched or zero");
  make_cost();
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::stringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return key == k.name; });
    if (it == table.end()) throw ConfigError("config line " + std::to_string(number) + ": unknown key '" + key + "'");
    if (value.empty()) throw ConfigError("config line " + std::to_string(number) + ": empty value for '" + key + "'");
    it->set(base, value);
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), std::move(base));
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& key : keys()) out.emplace_back(key.name, key.get(config));
  return out;
}

}  // namespace sotlab
