#include "sotlab/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--config", flags.config, "key = value configuration file")->check(CLI::ExistingFile);
  sub->add_option("--seed", flags.seed, "base seed (overrides the config)");
  sub->add_option("--out", flags.out, "output directory (overrides the config)");
  sub->add_option("--threads", flags.threads, "worker threads for path loops")->check(CLI::PositiveNumber);
}

sotlab::ExperimentConfig resolve(const CommonFlags& flags) {
  sotlab::ExperimentConfig config;
  if (!flags.config.empty()) config = sotlab::load_config(flags.config);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.out) config.out = *flags.out;
  if (flags.threads) config.threads = *flags.threads;
  return config;
}

int print_verdicts(const std::vector<sotlab::Verdict>& verdicts) {
  bool ok = true;
  for (const auto& v : verdicts) {
    std::cout << sotlab::format_verdict(v) << '\n';
    ok = ok && v.pass;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sotlab: zero-mass limits of controlled Langevin dynamics"};
  app.set_version_flag("--version", std::string(sotlab::kLibraryVersion));
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> scenarios{
      {"kernels-check", "kernels_check"}, {"bridge-solve", "bridge_solve"}, {"zero-mass", "zero_mass"},
      {"zero-mass-beta", "zero_mass_beta"}, {"duality", "duality"},         {"marginal", "marginal"},
      {"deterministic", "deterministic"},  {"assumptions", "assumptions"}};
  CommonFlags flags;
  std::vector<std::pair<CLI::App*, std::string>> subs;
  for (const auto& [command, scenario] : scenarios) {
    CLI::App* sub = app.add_subcommand(command, "run the " + scenario + " scenario");
    add_common(sub, flags);
    subs.emplace_back(sub, scenario);
  }
  CLI::App* report = app.add_subcommand("report", "print every verdict found in the output directory");
  add_common(report, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const sotlab::ExperimentConfig config = resolve(flags);
    if (report->parsed()) return print_verdicts(sotlab::read_verdicts(config.out));
    for (const auto& [sub, scenario] : subs) {
      if (!sub->parsed()) continue;
      const sotlab::ScenarioReport result = sotlab::run_scenario(scenario, config);
      sotlab::emit(result, config.out);
      std::fprintf(stderr, "%s: %.2f s, outputs in %s\n", scenario.c_str(), result.wall_clock_seconds,
                   config.out.string().c_str());
      return print_verdicts(result.verdicts);
    }
  } catch (const sotlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
