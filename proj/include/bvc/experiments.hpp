#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bvc/config.hpp"
#include "bvc/output.hpp"
#include "bvc/report.hpp"

namespace bvc {

/// Result of one experiment. `rows` is the main CSV; `tables` are written
/// beside it as <experiment>_<name>.csv. Nothing here depends on wall time,
/// so the files are reproducible from (config, seed).
struct ExperimentReport {
  std::string experiment;
  CsvTable rows;
  std::vector<std::pair<std::string, std::string>> summary;
  std::vector<std::pair<std::string, CsvTable>> tables;
  /// One entry per failed acceptance gate.
  std::vector<std::string> failures;
  std::vector<double> plot_x;
  std::vector<double> plot_y;
  std::string plot_x_label;
  std::string plot_y_label;

  bool passed() const { return failures.empty(); }
  const std::string& summary_value(const std::string& key) const;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

/// The main table as CSV text (header row always present).
void emit_csv(const ExperimentReport& report, const std::filesystem::path& path);
/// Log-log plot of the plot series.
void emit_svg_plot(const ExperimentReport& report, const std::filesystem::path& path);
/// Main table, summary, extra tables and (optionally) the plot under dir.
/// Returns the written paths.
std::vector<std::filesystem::path> write_report(const ExperimentReport& report, const std::filesystem::path& dir,
                                                bool svg);

/// BoundSweepReport as a table with the sweep CSV columns.
CsvTable sweep_table(const BoundSweepReport& report);

/// Seeded random trigonometric polynomial with standard normal coefficients on
/// every mode k with max_i |k_i| <= band. The same (seed, trial) gives the same
/// function on any grid with the same d and box.
struct BandLimitedField {
  int d = 1;
  double box = 1.0;
  std::vector<std::array<int, 3>> modes;
  std::vector<double> cos_coefficients;
  std::vector<double> sin_coefficients;

  static BandLimitedField random(int d, double box, int band, std::uint64_t seed, std::uint64_t trial);
  SampledField sample(const GridSpec& grid) const;
};

/// Runs body(i) for i in [0, count) on `workers` threads. Each index is
/// handled exactly once; the first exception by index is rethrown.
void parallel_for(int count, int workers, const std::function<void(int)>& body);

}  // namespace bvc
