#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pairsim/analysis.hpp"
#include "pairsim/simulator.hpp"

namespace pairsim {

enum class SweepAxis { power, od };

/// Throws bad_args for anything but "power" or "od".
SweepAxis parse_axis(const std::string& name);
std::string to_string(SweepAxis axis);

/// Simulates and analyzes in one pass, without keeping the tags.
struct SimulatedRun {
  AnalysisResult analysis;
  EngineCounters counters;
};
SimulatedRun simulate_and_analyze(const ExperimentConfig& cfg, const AnalysisConfig& acfg);

/// Configuration of sweep point `index`: rates from the scaling maps at the
/// point's power or OD, seed derived from the base seed and the index.
ExperimentConfig sweep_point_config(const ExperimentConfig& base, SweepAxis axis, double value,
                                    std::size_t index);

struct SweepRow {
  double value = 0.0;
  std::uint64_t seed = 0;
  double rate_s = 0.0;
  double rate_as = 0.0;
  double pair_rate = 0.0;        // net of accidentals
  double pair_rate_total = 0.0;  // all pairs in the FWHM window
  double g2_sas_peak = 0.0;
  MetricsReport report;
  EngineCounters counters;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::power;
  std::vector<SweepRow> rows;
  std::optional<double> slope_rate_s;
  std::optional<double> slope_rate_as;
  std::optional<double> slope_pair_rate;
};

/// Least-squares slope of log y against log x over points with x, y > 0;
/// empty with fewer than two such points or no spread in x.
std::optional<double> loglog_slope(std::span<const double> x, std::span<const double> y);

SweepResult run_sweep(const ExperimentConfig& base, const AnalysisConfig& acfg, SweepAxis axis,
                      std::span<const double> values);

/// Table with one row per point; slopes follow as '#' comment lines.
void write_sweep_csv(const SweepResult& r, const std::filesystem::path& path);

}  // namespace pairsim
