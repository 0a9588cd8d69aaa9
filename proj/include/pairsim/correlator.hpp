#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pairsim/timetag.hpp"

namespace pairsim {

/// Default analysis bin: the 0.32 ns coincidence window.
inline constexpr Picoseconds kDefaultBinPs = 320;
/// Default delay range: +-16 ns.
inline constexpr Picoseconds kDefaultRangePs = 16000;

/// Binning of pair delays tau = t_b - t_a.
///
/// Bin k is centred on k * bin_width. A delay lying exactly on an edge between
/// two bins belongs to the bin whose centre is nearer zero, which makes the grid
/// mirror-symmetric for any bin width. The grid holds every bin that intersects
/// [tau_min, tau_max).
class DelayGrid {
 public:
  /// Throws invalid_range unless bin_width > 0 and tau_min < tau_max.
  DelayGrid(Picoseconds bin_width_ps, Picoseconds tau_min_ps, Picoseconds tau_max_ps);

  /// Symmetric grid over [-range, range).
  static DelayGrid symmetric(Picoseconds bin_width_ps, Picoseconds range_ps) {
    return DelayGrid(bin_width_ps, -range_ps, range_ps);
  }

  Picoseconds bin_width_ps() const noexcept { return width_; }
  Picoseconds tau_min_ps() const noexcept { return tau_min_; }
  Picoseconds tau_max_ps() const noexcept { return tau_max_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(k_hi_ - k_lo_ + 1); }
  std::int64_t first_bin() const noexcept { return k_lo_; }
  Picoseconds center(std::size_t i) const noexcept {
    return (k_lo_ + static_cast<std::int64_t>(i)) * width_;
  }
  /// Smallest and largest integer delays that fall in some bin of the grid.
  Picoseconds lowest_delay() const noexcept { return lowest_; }
  Picoseconds highest_delay() const noexcept { return highest_; }

  /// Index into the grid of a delay known to lie within [lowest, highest].
  std::size_t index_of(Picoseconds tau) const noexcept {
    return static_cast<std::size_t>(bin_number(tau, width_) - k_lo_);
  }
  /// Index of the bin centred on tau, if the grid has one.
  std::optional<std::size_t> index_of_center(Picoseconds tau) const;

  /// Signed bin number k of a delay (round half toward zero of tau / width).
  static std::int64_t bin_number(Picoseconds tau, Picoseconds width) noexcept {
    const std::int64_t a = tau < 0 ? -tau : tau;
    const std::int64_t n = 2 * a - width;
    const std::int64_t k = n <= 0 ? 0 : (n + 2 * width - 1) / (2 * width);
    return tau < 0 ? -k : k;
  }

  friend bool operator==(const DelayGrid&, const DelayGrid&) = default;

 private:
  Picoseconds width_;
  Picoseconds tau_min_;
  Picoseconds tau_max_;
  std::int64_t k_lo_;
  std::int64_t k_hi_;
  Picoseconds lowest_;
  Picoseconds highest_;
};

struct CorrelationHistogram {
  Picoseconds bin_width_ps = kDefaultBinPs;
  Picoseconds tau_min_ps = -kDefaultRangePs;
  Picoseconds tau_max_ps = kDefaultRangePs;
  std::vector<std::uint64_t> counts;
  std::uint64_t n_a = 0;
  std::uint64_t n_b = 0;
  Picoseconds duration_ps = 0;

  DelayGrid grid() const { return DelayGrid(bin_width_ps, tau_min_ps, tau_max_ps); }
  std::uint64_t total() const;

  friend bool operator==(const CorrelationHistogram&, const CorrelationHistogram&) = default;
};

/// Normalized correlation with one-sigma errors per bin.
struct G2Curve {
  std::vector<double> tau_ps;
  std::vector<double> g2;
  std::vector<double> sigma;

  std::size_t size() const noexcept { return g2.size(); }
  /// Index of the point at tau, if present.
  std::optional<std::size_t> index_at(double tau) const;
};

/// A value with its one-sigma uncertainty.
struct Measured {
  double value = 0.0;
  double sigma = 0.0;
};

/// Streaming two-pointer pair-delay histogram.
///
/// push() takes consecutive chunks of both streams; every tag of a chunk must
/// lie below `horizon` and every later tag at or above it. Cost is
/// O(N_a + N_b + matches). With same_stream set, the two inputs are the same
/// detector record and a tag is never paired with itself.
class CrossCorrelator {
 public:
  explicit CrossCorrelator(const DelayGrid& grid, bool same_stream = false);

  void push(std::span<const TimeTag> a, std::span<const TimeTag> b, TimeTag horizon);
  /// Processes everything still buffered; no more push() afterwards.
  void finish();
  CorrelationHistogram histogram(Picoseconds duration_ps) const;

 private:
  void drain(std::optional<TimeTag> horizon);

  DelayGrid grid_;
  bool same_stream_;
  std::vector<TimeTag> a_;
  std::vector<TimeTag> b_;
  std::size_t a_head_ = 0;
  std::size_t b_head_ = 0;
  std::uint64_t a_base_ = 0;  // global index of a_[0]
  std::uint64_t b_base_ = 0;
  std::vector<std::uint64_t> counts_;
  std::uint64_t n_a_ = 0;
  std::uint64_t n_b_ = 0;
};

/// Histogram of t_b - t_a over all ordered pairs. Throws duration_mismatch.
CorrelationHistogram cross_histogram(const TimeTagStream& a, const TimeTagStream& b,
                                     Picoseconds bin_width_ps, Picoseconds tau_min_ps,
                                     Picoseconds tau_max_ps);

/// Re-bins a 1 ps histogram onto a coarser grid inside its range.
CorrelationHistogram rebin(const CorrelationHistogram& fine, const DelayGrid& grid);

/// Stationary estimator g2 = C * T / (N_a * N_b * bin). Throws empty_stream.
G2Curve normalize_g2(const CorrelationHistogram& h);

/// Zero-delay capable autocorrelation: the stream is split 50/50 and the halves
/// are cross-correlated. Throws empty_stream.
G2Curve auto_g2(const TimeTagStream& s, Picoseconds bin_width_ps, Picoseconds range_ps,
                std::uint64_t seed);

/// Number of pairs with |(t_b - t_a) - center| <= window / 2.
std::uint64_t coincidences_in_window(const TimeTagStream& a, const TimeTagStream& b,
                                     Picoseconds center_ps, Picoseconds window_ps);

/// Same count taken from a 1 ps histogram; window may be fractional.
std::uint64_t window_count(const CorrelationHistogram& fine, double center_ps, double window_ps);

struct ConditionalResult {
  G2Curve curve;
  Picoseconds tau_star_ps = 0;
  std::uint64_t n_s = 0;
  std::uint64_t n_herald = 0;            // N_{S,AS1} at tau_star
  std::vector<std::uint64_t> n_triple;   // N_{S,AS1,AS2}(tau)
  std::vector<std::uint64_t> n_s_as2;    // N_{S,AS2}(tau)
  std::vector<std::uint64_t> n_s_as1;    // S-AS1 histogram used to locate tau_star
};

/// Streaming accumulator for the heralded (conditional) correlation.
///
/// For every Stokes tag it records the grid bins of all AS1 and AS2 partners,
/// filling the S-AS1 and S-AS2 histograms and the joint (AS1 bin, AS2 bin)
/// three-fold table. The herald delay can therefore be chosen after the data
/// has been seen, in one pass.
class ConditionalAccumulator {
 public:
  explicit ConditionalAccumulator(const DelayGrid& grid);

  void push(std::span<const TimeTag> s, std::span<const TimeTag> as1,
            std::span<const TimeTag> as2, TimeTag horizon);
  void finish();

  /// window_ps must be an odd multiple of the bin width; tau_star defaults to
  /// the peak bin of the S-AS1 histogram (ties toward smaller |tau|).
  /// Throws invalid_range, empty_stream, no_coincidences.
  ConditionalResult result(Picoseconds window_ps, std::optional<Picoseconds> tau_star_ps) const;

  const DelayGrid& grid() const noexcept { return grid_; }

 private:
  void drain(std::optional<TimeTag> horizon);

  DelayGrid grid_;
  std::vector<TimeTag> s_, a1_, a2_;
  std::size_t s_head_ = 0, a1_head_ = 0, a2_head_ = 0;
  std::vector<std::uint64_t> h1_, h2_, triple_;
  std::vector<std::size_t> bins1_, bins2_;
  std::uint64_t n_s_ = 0;
};

/// g2_C(tau) = N_{S,AS1,AS2}(tau) N_S / (N_{S,AS1}(tau*) N_{S,AS2}(tau)) with
/// AS2 delays measured from the Stokes tag on the given grid.
ConditionalResult conditional_g2(const TimeTagStream& s, const TimeTagStream& as1,
                                 const TimeTagStream& as2, Picoseconds window_ps,
                                 std::optional<Picoseconds> tau_star_ps, const DelayGrid& grid);

struct PeakMetrics {
  double tau_peak_ps = 0.0;
  double g2_peak = 0.0;
  double g2_sigma = 0.0;
  double fwhm_ps = 0.0;
};

/// Maximum and its full width at 1 + (peak - 1) / 2, crossings linearly
/// interpolated. Throws flat_curve if nothing rises above 1 or a flank never
/// drops to the half level inside the curve.
PeakMetrics peak_metrics(const G2Curve& c);

struct DipMetrics {
  double tau_ps = 0.0;
  double g2 = 0.0;
  double g2_sigma = 0.0;
  double fwhm_ps = 0.0;
};

/// Width of the anti-bunching dip around the point at tau_ps: crossings of
/// 1 - (1 - g2(tau)) / 2 walking outward. Throws flat_curve if g2(tau) >= 1
/// or a flank never recovers.
DipMetrics dip_metrics(const G2Curve& c, double tau_ps);

/// F = g2_SAS^2 / (g2_SS(0) g2_ASAS(0)), relative errors added in quadrature.
/// Throws nonpositive_input.
Measured cs_factor(Measured g2_sas_peak, Measured g2_ss_0, Measured g2_asas_0);

/// eta = N_{S,AS} / N_S. Throws zero_trigger if n_s <= 0 and invariant_violation
/// for ratios above one.
double heralding_efficiency(double n_pairs, double n_s);

}  // namespace pairsim
