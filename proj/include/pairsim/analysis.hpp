#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pairsim/correlator.hpp"
#include "pairsim/timetag.hpp"

namespace pairsim {

struct AnalysisConfig {
  Picoseconds bin_ps = kDefaultBinPs;
  Picoseconds range_ps = kDefaultRangePs;
  Picoseconds herald_window_ps = kDefaultBinPs;
  std::optional<Picoseconds> tau_star_ps;  // herald delay; peak of S-AS1 if unset
  std::uint64_t split_seed = 1;            // software HBT split when a detector is single
};

/// Quantities of one acquisition. Absent optionals mean the statistic is
/// undefined for the data (no peak, no heralds, no second AS detector).
struct MetricsReport {
  double duration_s = 0.0;
  std::uint64_t n_s = 0;
  std::uint64_t n_as = 0;
  Measured rate_s;
  Measured rate_as;

  Measured g2_sas_peak;
  double tau_peak_ps = 0.0;
  std::optional<double> fwhm_ps;
  Measured g2_ss_0;
  Measured g2_asas_0;
  std::string method_ss;    // "hbt" (two detectors) or "split" (software)
  std::string method_asas;
  std::optional<Measured> cs_factor;

  double pair_window_ps = 0.0;  // coincidence window used for pair counting
  std::uint64_t pair_count = 0;
  Measured pair_rate;           // all S-AS pairs in the window
  Measured accidental_rate;     // N_S N_AS window / T
  Measured net_pair_rate;       // pair_rate - accidental_rate
  std::optional<Measured> heralding_eta;

  std::optional<Measured> g2c_0;  // heralded AS2 coincident with the herald
  std::optional<double> g2c_tau_star_ps;
  std::optional<double> g2c_theory;  // 2 g2_ASAS(0) / g2_SAS peak
  std::optional<double> g2c_dip_fwhm_ps;
  std::uint64_t n_herald = 0;
};

struct AnalysisResult {
  MetricsReport report;
  CorrelationHistogram sas;  // S x AS on the analysis grid
  CorrelationHistogram ss;
  CorrelationHistogram asas;
  G2Curve g2_sas;
  G2Curve g2_ss;
  G2Curve g2_asas;
  std::optional<ConditionalResult> conditional;
};

/// Streaming analysis of an acquisition.
///
/// S is the union of channels 0 and 3, AS the union of 1 and 2. The
/// autocorrelations use the two detectors of an HBT pair when both channels are
/// present and a software 50/50 split of the single detector otherwise. The
/// heralded correlation needs both AS detectors.
class StreamAnalyzer {
 public:
  /// Throws missing_channel unless channels 0 and 1 are present.
  StreamAnalyzer(std::span<const ChannelId> channels, Picoseconds duration_ps,
                 const AnalysisConfig& cfg);

  /// tags[c] holds channel c's detections below horizon; later pushes hold
  /// only detections at or above it.
  void push(const std::array<std::vector<TimeTag>, 4>& tags, TimeTag horizon);

  /// Throws empty_stream if S or AS saw no detections.
  AnalysisResult finish();

 private:
  AnalysisConfig cfg_;
  Picoseconds duration_;
  bool has_s2_, has_as2_;
  CrossCorrelator fine_;  // S x AS at 1 ps
  CrossCorrelator ss_;
  CrossCorrelator asas_;
  std::optional<ConditionalAccumulator> cond_;
  BernoulliRouter split_s_, split_as_;
  std::uint64_t n_s_ = 0, n_as_ = 0;
  std::vector<TimeTag> s_, as_, a_, b_, c_, d_;
};

AnalysisResult analyze(const StreamSet& set, const AnalysisConfig& cfg);

/// Writes tau_ps,g2,sigma rows.
void write_curve_csv(const G2Curve& c, const std::filesystem::path& path);
/// Writes tau_ps,counts,sigma rows with Poisson sigma.
void write_histogram_csv(const CorrelationHistogram& h, const std::filesystem::path& path);

}  // namespace pairsim
