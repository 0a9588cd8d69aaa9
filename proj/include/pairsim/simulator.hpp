#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pairsim/physics.hpp"
#include "pairsim/random.hpp"
#include "pairsim/timetag.hpp"

namespace pairsim {

/// SFWM source model. Rates are photon (pair) rates before any loss.
struct SourceParams {
  double pair_rate_hz = 0.0;
  double tau_as_ps = 700.0;      // intrinsic S -> AS delay, one-sided exponential
  double tau_coh_ps = 1500.0;    // field correlation time of the thermal intensity
  double bg_s_hz = 0.0;          // uncorrelated light entering the S filter
  double bg_as_hz = 0.0;         // uncorrelated light entering the AS filter
  double collection_s = 1.0;     // pair S photon reaching the S filter
  double collection_as = 1.0;    // pair AS photon reaching the AS filter
  bool modulated_backgrounds = false;  // backgrounds follow the pair intensity
  double power_mw = 0.0;
  double od = 0.0;
  double c_s = 0.0;     // S background per mW
  double c_pair = 0.0;  // pairs per (mW OD^2)
  double c_as = 0.0;    // AS background per unit OD
};

struct DetectorParams {
  double efficiency = 1.0;
  double jitter_fwhm_ps = 0.0;
  double dead_time_ps = 0.0;
  double dark_rate_hz = 0.0;
};

struct ExperimentConfig {
  SourceParams source;
  FilterParams filter_s;
  FilterParams filter_as;
  DetectorParams det_s;    // also used for the second S detector
  DetectorParams det_as1;
  DetectorParams det_as2;
  double duration_s = 1.0;
  std::uint64_t seed = 1;
  bool hbt_on_as = true;   // AS split 50/50 onto channels 1 and 2
  bool hbt_on_s = false;   // S split 50/50 onto channels 0 and 3
  double intensity_cap = 12.0;  // thinning bound on the unit-mean intensity
};

/// Throws invariant_violation for out-of-range parameters.
void validate(const ExperimentConfig& cfg);

/// Sweep maps: pair rate = c_pair P OD^2, S background = c_s P, AS background = c_as OD.
SourceParams at_operating_point(const SourceParams& src, double power_mw, double od);

/// Channels a configuration produces, ascending.
std::vector<ChannelId> experiment_channels(const ExperimentConfig& cfg);

Picoseconds duration_ps(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Stand-alone stages on explicit event lists (emission/arrival times in ps).

/// Piecewise-constant unit-mean intensity sampled every dt_ps.
struct IntensityTrace {
  double dt_ps = 1.0;
  std::vector<double> values;

  double at(double t_ps) const;
  double max() const;
};

/// |a|^2 of a stationary complex Ornstein-Uhlenbeck amplitude with
/// E|a|^2 = 1 and <a(t) a*(0)> = exp(-|t| / tau_coh). An infinite tau_coh
/// gives a frozen field: one exponentially distributed level.
/// Throws grid_too_coarse if dt > tau_coh / 10.
IntensityTrace sample_intensity(double tau_coh_ps, Picoseconds duration_ps, double dt_ps,
                                std::uint64_t seed);

/// Pair emissions; element i of s and as belong to the same pair.
struct PairEmissions {
  std::vector<double> s;
  std::vector<double> as;
};

/// Inhomogeneous Poisson pairs at rate pair_rate * I(t) on [0, duration);
/// the AS photon follows after an exponential delay of mean tau_as.
PairEmissions generate_pairs(const SourceParams& src, const IntensityTrace& intensity,
                             Picoseconds duration_ps, std::uint64_t seed);

/// Appends Poisson background on [0, duration), modulated by `intensity` when
/// given. Output sorted.
std::vector<double> add_background(std::vector<double> events, double rate_hz,
                                   const IntensityTrace* intensity, Picoseconds duration_ps,
                                   std::uint64_t seed);

/// Keeps each event with the peak transmission and delays survivors by an
/// exponential of mean 1 / (2 pi fwhm). Input order is kept.
std::vector<double> apply_filter(std::span<const double> events, const FilterParams& f,
                                 std::uint64_t seed);

/// Efficiency thinning, truncated Gaussian jitter, dark counts, sorting,
/// clipping to [0, duration) and non-paralyzable dead time, in that order.
TimeTagStream apply_detector(std::span<const double> events, const DetectorParams& d,
                             ChannelId channel, Picoseconds duration_ps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Streaming engine.

/// Detections of all channels below `horizon`, sorted per channel.
struct Chunk {
  TimeTag horizon = 0;
  std::array<std::vector<TimeTag>, 4> tags;  // indexed by channel id
};

struct EngineCounters {
  std::uint64_t emissions = 0;           // accepted source events
  std::uint64_t pair_photons_s = 0;      // pair S photons reaching a detector
  std::uint64_t pair_photons_as = 0;
  std::uint64_t background_photons = 0;
  std::uint64_t dark_counts = 0;
  std::uint64_t dead_time_losses = 0;
  std::array<std::uint64_t, 4> detected{};
};

/// Generates the detection record of an experiment in time order.
///
/// The source emits from a short pre-roll before t = 0 so the first
/// detections are stationary. Every random source owns its own generator, so
/// the record depends only on the configuration and seed, not on block size.
class ExperimentEngine {
 public:
  explicit ExperimentEngine(const ExperimentConfig& cfg, double block_s = 0.01);
  ~ExperimentEngine();
  ExperimentEngine(const ExperimentEngine&) = delete;
  ExperimentEngine& operator=(const ExperimentEngine&) = delete;

  /// Fills the next chunk; returns false once the acquisition is exhausted.
  bool next(Chunk& chunk);

  const EngineCounters& counters() const noexcept;
  Picoseconds duration_ps() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Full simulation in memory; metadata carries seed and config hash.
StreamSet simulate_experiment(const ExperimentConfig& cfg);

}  // namespace pairsim
