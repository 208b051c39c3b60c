#pragma once

// Scenario files, run manifests and CSV output shared by the command-line tool.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kwave/diagnostics.hpp"
#include "kwave/solver.hpp"

namespace kwave::io {

using solver::Scenario;

/// Parses the sectioned key = value format:
///
///   # comment
///   [mesh]
///   nx = 340
///
/// Unknown sections or keys, malformed numbers and out-of-range values raise
/// ConfigError prefixed with "<source>:<line>:". Cross-field checks (wave
/// connectivity, cost budget, duct symmetry) run afterwards through
/// Scenario::validate.
Scenario parse_scenario_text(const std::string& text, const std::string& source = "<scenario>");
Scenario parse_scenario(const std::filesystem::path& path);

/// Every field of the scenario with defaults filled in.
nlohmann::json scenario_to_json(const Scenario& scenario);

/// FNV-1a 64 of a JSON document's compact dump, as 16 hex digits.
std::string json_hash(const nlohmann::json& doc);

struct RunManifest {
  std::string command;
  nlohmann::json parameters;  // scenario or subcommand options
  std::uint64_t seed = 0;
  std::string version;
  double wall_clock_seconds = 0.0;
  std::string started_utc;
  int threads = 1;
  std::vector<std::string> outputs;

  /// Hash of (command, parameters, seed, version); identifies the inputs, not the timing.
  std::string hash() const;
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

std::string tool_version();
std::string utc_now();

/// "# manifest: <hash>" first line shared by every CSV output.
void write_manifest_line(std::ostream& os, const std::string& hash);
/// Reads the hash back from the first line; empty when absent.
std::string read_manifest_line(const std::filesystem::path& csv);

/// Columns x, rho, u1, u2, theta, phi (y after x in a duct); 17 significant digits.
void write_snapshot_csv(std::ostream& os, const solver::Solver& solver, const solver::SolutionSnapshot& s,
                        const std::string& hash);

struct DiagnosticsTable {
  std::string manifest_hash;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<double> column(const std::string& name) const;
};

DiagnosticsTable read_diagnostics_csv(const std::filesystem::path& path);

struct ReportEntry {
  std::filesystem::path file;
  std::string manifest_hash;
  bool manifest_verified = false;  // hash matches manifest.json next to the file
  std::size_t rows = 0;
  double t_final = 0.0;
  std::map<std::string, double> slopes;  // tail log-log slopes of selected columns
  std::map<std::string, double> final_values;
};

/// Aggregates every diagnostics CSV below `dir`; ConfigError when there is none.
std::vector<ReportEntry> build_report(const std::filesystem::path& dir);
void write_report_csv(std::ostream& os, const std::vector<ReportEntry>& entries);

}  // namespace kwave::io
