#include "sotlab/io.hpp"

#include "sotlab/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace sotlab {

bool ScenarioReport::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

void write_table_csv(const Table& table, const std::filesystem::path& path) {
  std::FILE* out = std::fopen(path.string().c_str(), "w");
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (std::size_t c = 0; c < table.header.size(); ++c)
    std::fprintf(out, "%s%s", table.header[c].c_str(), c + 1 == table.header.size() ? "\n" : ",");
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      std::fclose(out);
      throw IoError("table " + table.name + ": row width differs from header");
    }
    for (std::size_t c = 0; c < row.size(); ++c) std::fprintf(out, "%.17g%s", row[c], c + 1 == row.size() ? "\n" : ",");
  }
  if (std::fclose(out) != 0) throw IoError("write failed for " + path.string());
}

nlohmann::json to_json(const Verdict& verdict) {
  auto number = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(std::to_string(x)); };
  return {{"type", "verdict"},
          {"rule_id", verdict.rule_id},
          {"description", verdict.description},
          {"measured", number(verdict.measured)},
          {"threshold", number(verdict.threshold)},
          {"pass", verdict.pass}};
}

std::string format_verdict(const Verdict& verdict) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, "[%s] %-28s measured=%.6g threshold=%.6g  %s", verdict.pass ? "PASS" : "FAIL",
                verdict.rule_id.c_str(), verdict.measured, verdict.threshold, verdict.description.c_str());
  return buffer;
}

void emit(const ScenarioReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
  for (const auto& table : report.tables) write_table_csv(table, out_dir / (report.scenario + "_" + table.name + ".csv"));
  const auto path = out_dir / (report.scenario + ".jsonl");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  nlohmann::json meta = report.metadata;
  meta["type"] = "meta";
  meta["scenario"] = report.scenario;
  meta["library_version"] = kLibraryVersion;
  meta["wall_clock_seconds"] = report.wall_clock_seconds;
  out << meta.dump() << '\n';
  for (const auto& verdict : report.verdicts) out << to_json(verdict).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Verdict> read_verdicts(const std::filesystem::path& out_dir) {
  if (!std::filesystem::is_directory(out_dir)) throw IoError("not a directory: " + out_dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(out_dir))
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<Verdict> verdicts;
  for (const auto& file : files) {
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json record;
      try {
        record = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed JSON line in " + file.string() + ": " + e.what());
      }
      if (record.value("type", "") != "verdict") continue;
      auto number = [](const nlohmann::json& x) { return x.is_number() ? x.get<double>() : std::stod(x.get<std::string>()); };
      verdicts.push_back({record.at("rule_id").get<std::string>(), record.at("description").get<std::string>(),
                          number(record.at("measured")), number(record.at("threshold")), record.at("pass").get<bool>()});
    }
  }
  return verdicts;
}

}  // namespace sotlab
