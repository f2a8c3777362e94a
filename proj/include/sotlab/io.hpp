#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace sotlab {

inline constexpr const char* kLibraryVersion = "1.0.0";

/// One acceptance decision: measured value against a threshold.
struct Verdict {
  std::string rule_id;
  std::string description;
  double measured;
  double threshold;
  bool pass;
};

/// Numeric table with a fixed header; written as CSV with %.17g.
struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct ScenarioReport {
  std::string scenario;
  std::vector<Verdict> verdicts;
  std::vector<Table> tables;
  nlohmann::json metadata = nlohmann::json::object();
  double wall_clock_seconds = 0.0;

  bool all_pass() const;
};

void write_table_csv(const Table& table, const std::filesystem::path& path);
/// Writes <scenario>_<table>.csv for each table and <scenario>.jsonl with metadata and verdicts.
void emit(const ScenarioReport& report, const std::filesystem::path& out_dir);
/// Verdict lines collected from every .jsonl file in a directory, in file-name order.
std::vector<Verdict> read_verdicts(const std::filesystem::path& out_dir);

nlohmann::json to_json(const Verdict& verdict);
std::string format_verdict(const Verdict& verdict);

}  // namespace sotlab
