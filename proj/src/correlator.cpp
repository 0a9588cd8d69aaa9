#include "pairsim/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pairsim/error.hpp"

namespace pairsim {
namespace {

using I64 = std::int64_t;

I64 as_signed(TimeTag t) { return static_cast<I64>(t); }

// Drops the consumed prefix of a buffer once it dominates the storage.
void compact(std::vector<TimeTag>& buf, std::size_t& head, std::uint64_t* base = nullptr) {
  if (head > 4096 && head * 2 > buf.size()) {
    buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(head));
    if (base) *base += head;
    head = 0;
  }
}

// Advances head past tags that no current or future trigger can pair with.
void skip_below(const std::vector<TimeTag>& buf, std::size_t& head, I64 bound) {
  while (head < buf.size() && as_signed(buf[head]) < bound) ++head;
}

}  // namespace

DelayGrid::DelayGrid(Picoseconds bin_width_ps, Picoseconds tau_min_ps, Picoseconds tau_max_ps)
    : width_(bin_width_ps), tau_min_(tau_min_ps), tau_max_(tau_max_ps) {
  if (bin_width_ps <= 0) throw Error(Errc::invalid_range, "bin width must be positive");
  if (tau_min_ps >= tau_max_ps) throw Error(Errc::invalid_range, "tau_min must be below tau_max");
  k_lo_ = bin_number(tau_min_ps, width_);
  k_hi_ = bin_number(tau_max_ps - 1, width_);
  lowest_ = k_lo_ * width_ - width_ / 2 - 2;
  while (bin_number(lowest_, width_) < k_lo_) ++lowest_;
  highest_ = k_hi_ * width_ + width_ / 2 + 2;
  while (bin_number(highest_, width_) > k_hi_) --highest_;
}

std::optional<std::size_t> DelayGrid::index_of_center(Picoseconds tau) const {
  if (tau % width_ != 0) return std::nullopt;
  const std::int64_t k = tau / width_;
  if (k < k_lo_ || k > k_hi_) return std::nullopt;
  return static_cast<std::size_t>(k - k_lo_);
}

std::uint64_t CorrelationHistogram::total() const {
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

std::optional<std::size_t> G2Curve::index_at(double tau) const {
  for (std::size_t i = 0; i < tau_ps.size(); ++i) {
    if (tau_ps[i] == tau) return i;
  }
  return std::nullopt;
}

CrossCorrelator::CrossCorrelator(const DelayGrid& grid, bool same_stream)
    : grid_(grid), same_stream_(same_stream), counts_(grid.size(), 0) {}

void CrossCorrelator::push(std::span<const TimeTag> a, std::span<const TimeTag> b,
                           TimeTag horizon) {
  a_.insert(a_.end(), a.begin(), a.end());
  b_.insert(b_.end(), b.begin(), b.end());
  n_a_ += a.size();
  n_b_ += b.size();
  drain(horizon);
}

void CrossCorrelator::finish() { drain(std::nullopt); }

void CrossCorrelator::drain(std::optional<TimeTag> horizon) {
  const I64 lo = grid_.lowest_delay();
  const I64 hi = grid_.highest_delay();
  const std::size_t nb = b_.size();
  while (a_head_ < a_.size()) {
    const I64 t = as_signed(a_[a_head_]);
    if (horizon && t + hi >= as_signed(*horizon)) break;
    skip_below(b_, b_head_, t + lo);
    const std::uint64_t ia = a_base_ + a_head_;
    for (std::size_t j = b_head_; j < nb; ++j) {
      const I64 tau = as_signed(b_[j]) - t;
      if (tau > hi) break;
      if (same_stream_ && b_base_ + j == ia) continue;
      ++counts_[grid_.index_of(tau)];
    }
    ++a_head_;
  }
  if (horizon) {
    // Future triggers start no earlier than the next buffered one, or the horizon.
    const I64 next_a = a_head_ < a_.size() ? as_signed(a_[a_head_]) : as_signed(*horizon);
    skip_below(b_, b_head_, next_a + lo);
  }
  compact(a_, a_head_, &a_base_);
  compact(b_, b_head_, &b_base_);
}

CorrelationHistogram CrossCorrelator::histogram(Picoseconds duration_ps) const {
  CorrelationHistogram h;
  h.bin_width_ps = grid_.bin_width_ps();
  h.tau_min_ps = grid_.tau_min_ps();
  h.tau_max_ps = grid_.tau_max_ps();
  h.counts = counts_;
  h.n_a = n_a_;
  h.n_b = n_b_;
  h.duration_ps = duration_ps;
  return h;
}

CorrelationHistogram cross_histogram(const TimeTagStream& a, const TimeTagStream& b,
                                     Picoseconds bin_width_ps, Picoseconds tau_min_ps,
                                     Picoseconds tau_max_ps) {
  if (a.duration_ps() != b.duration_ps()) {
    throw Error(Errc::duration_mismatch, "correlated streams must share a duration");
  }
  const bool same = &a == &b || (!a.empty() && a.tags().data() == b.tags().data() &&
                                 a.size() == b.size());
  CrossCorrelator corr(DelayGrid(bin_width_ps, tau_min_ps, tau_max_ps), same);
  corr.push(a.tags(), b.tags(), static_cast<TimeTag>(a.duration_ps()));
  corr.finish();
  return corr.histogram(a.duration_ps());
}

CorrelationHistogram rebin(const CorrelationHistogram& fine, const DelayGrid& grid) {
  if (fine.bin_width_ps != 1) throw Error(Errc::invalid_range, "rebin needs a 1 ps histogram");
  const DelayGrid src = fine.grid();
  if (grid.lowest_delay() < src.lowest_delay() || grid.highest_delay() > src.highest_delay()) {
    throw Error(Errc::invalid_range, "target grid exceeds the source range");
  }
  CorrelationHistogram out;
  out.bin_width_ps = grid.bin_width_ps();
  out.tau_min_ps = grid.tau_min_ps();
  out.tau_max_ps = grid.tau_max_ps();
  out.counts.assign(grid.size(), 0);
  out.n_a = fine.n_a;
  out.n_b = fine.n_b;
  out.duration_ps = fine.duration_ps;
  for (std::size_t i = 0; i < fine.counts.size(); ++i) {
    const Picoseconds tau = src.center(i);
    if (tau < grid.lowest_delay() || tau > grid.highest_delay()) continue;
    out.counts[grid.index_of(tau)] += fine.counts[i];
  }
  return out;
}

G2Curve normalize_g2(const CorrelationHistogram& h) {
  if (h.n_a == 0 || h.n_b == 0) {
    throw Error(Errc::empty_stream, "cannot normalize a histogram of an empty stream");
  }
  const DelayGrid grid = h.grid();
  const double norm = static_cast<double>(h.duration_ps) /
                      (static_cast<double>(h.n_a) * static_cast<double>(h.n_b) *
                       static_cast<double>(h.bin_width_ps));
  G2Curve c;
  c.tau_ps.resize(h.counts.size());
  c.g2.resize(h.counts.size());
  c.sigma.resize(h.counts.size());
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const auto n = static_cast<double>(h.counts[i]);
    c.tau_ps[i] = static_cast<double>(grid.center(i));
    c.g2[i] = n * norm;
    // Empty bins report the value one count would have had.
    c.sigma[i] = n > 0 ? c.g2[i] / std::sqrt(n) : norm;
  }
  return c;
}

G2Curve auto_g2(const TimeTagStream& s, Picoseconds bin_width_ps, Picoseconds range_ps,
                std::uint64_t seed) {
  if (s.empty()) throw Error(Errc::empty_stream, "autocorrelation of an empty stream");
  const auto [first, second] = split_hbt(s, 0.5, seed);
  return normalize_g2(cross_histogram(first, second, bin_width_ps, -range_ps, range_ps));
}

std::uint64_t coincidences_in_window(const TimeTagStream& a, const TimeTagStream& b,
                                     Picoseconds center_ps, Picoseconds window_ps) {
  if (window_ps <= 0) throw Error(Errc::invalid_range, "coincidence window must be positive");
  const I64 lo = center_ps - window_ps / 2;
  const I64 hi = center_ps + window_ps / 2;
  const auto bt = b.tags();
  std::size_t first = 0;
  std::size_t past = 0;
  std::uint64_t n = 0;
  for (TimeTag ta : a.tags()) {
    const I64 t = as_signed(ta);
    while (first < bt.size() && as_signed(bt[first]) < t + lo) ++first;
    past = std::max(past, first);
    while (past < bt.size() && as_signed(bt[past]) <= t + hi) ++past;
    n += past - first;
  }
  return n;
}

std::uint64_t window_count(const CorrelationHistogram& fine, double center_ps, double window_ps) {
  if (fine.bin_width_ps != 1) throw Error(Errc::invalid_range, "window_count needs 1 ps bins");
  const DelayGrid grid = fine.grid();
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < fine.counts.size(); ++i) {
    if (std::abs(static_cast<double>(grid.center(i)) - center_ps) <= window_ps / 2) {
      n += fine.counts[i];
    }
  }
  return n;
}

ConditionalAccumulator::ConditionalAccumulator(const DelayGrid& grid)
    : grid_(grid),
      h1_(grid.size(), 0),
      h2_(grid.size(), 0),
      triple_(grid.size() * grid.size(), 0) {}

void ConditionalAccumulator::push(std::span<const TimeTag> s, std::span<const TimeTag> as1,
                                  std::span<const TimeTag> as2, TimeTag horizon) {
  s_.insert(s_.end(), s.begin(), s.end());
  a1_.insert(a1_.end(), as1.begin(), as1.end());
  a2_.insert(a2_.end(), as2.begin(), as2.end());
  n_s_ += s.size();
  drain(horizon);
}

void ConditionalAccumulator::finish() { drain(std::nullopt); }

void ConditionalAccumulator::drain(std::optional<TimeTag> horizon) {
  const I64 lo = grid_.lowest_delay();
  const I64 hi = grid_.highest_delay();
  const std::size_t n = grid_.size();
  auto collect = [&](const std::vector<TimeTag>& buf, std::size_t& head, I64 t,
                     std::vector<std::size_t>& bins) {
    bins.clear();
    skip_below(buf, head, t + lo);
    for (std::size_t j = head; j < buf.size(); ++j) {
      const I64 tau = as_signed(buf[j]) - t;
      if (tau > hi) break;
      bins.push_back(grid_.index_of(tau));
    }
  };
  while (s_head_ < s_.size()) {
    const I64 t = as_signed(s_[s_head_]);
    if (horizon && t + hi >= as_signed(*horizon)) break;
    collect(a1_, a1_head_, t, bins1_);
    collect(a2_, a2_head_, t, bins2_);
    for (auto k1 : bins1_) ++h1_[k1];
    for (auto k2 : bins2_) ++h2_[k2];
    for (auto k1 : bins1_) {
      for (auto k2 : bins2_) ++triple_[k1 * n + k2];
    }
    ++s_head_;
  }
  if (horizon) {
    const I64 next_s = s_head_ < s_.size() ? as_signed(s_[s_head_]) : as_signed(*horizon);
    skip_below(a1_, a1_head_, next_s + lo);
    skip_below(a2_, a2_head_, next_s + lo);
  }
  compact(s_, s_head_);
  compact(a1_, a1_head_);
  compact(a2_, a2_head_);
}

ConditionalResult ConditionalAccumulator::result(Picoseconds window_ps,
                                                 std::optional<Picoseconds> tau_star_ps) const {
  const Picoseconds w = grid_.bin_width_ps();
  if (window_ps <= 0 || window_ps % w != 0 || (window_ps / w) % 2 == 0) {
    throw Error(Errc::invalid_range, "herald window must be an odd multiple of the bin width");
  }
  if (n_s_ == 0) throw Error(Errc::empty_stream, "no Stokes detections");
  const std::size_t n = grid_.size();

  std::size_t star = 0;
  if (tau_star_ps) {
    auto idx = grid_.index_of_center(*tau_star_ps);
    if (!idx) throw Error(Errc::invalid_range, "tau_star is not a bin centre of the grid");
    star = *idx;
  } else {
    for (std::size_t i = 1; i < n; ++i) {
      const auto better = h1_[i] > h1_[star] ||
                          (h1_[i] == h1_[star] && std::abs(grid_.center(i)) <
                                                      std::abs(grid_.center(star)));
      if (better) star = i;
    }
  }
  const auto half = static_cast<std::size_t>((window_ps / w - 1) / 2);
  const std::size_t first = star >= half ? star - half : 0;
  const std::size_t last = std::min(n - 1, star + half);

  ConditionalResult r;
  r.tau_star_ps = grid_.center(star);
  r.n_s = n_s_;
  r.n_s_as1 = h1_;
  r.n_s_as2 = h2_;
  r.n_triple.assign(n, 0);
  for (std::size_t k1 = first; k1 <= last; ++k1) {
    r.n_herald += h1_[k1];
    for (std::size_t k2 = 0; k2 < n; ++k2) r.n_triple[k2] += triple_[k1 * n + k2];
  }
  if (r.n_herald == 0) {
    throw Error(Errc::no_coincidences, "no S-AS1 coincidences at the herald delay");
  }
  const double ns = static_cast<double>(n_s_);
  const double nh = static_cast<double>(r.n_herald);
  r.curve.tau_ps.resize(n);
  r.curve.g2.resize(n);
  r.curve.sigma.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double n3 = static_cast<double>(r.n_triple[k]);
    const double n2 = static_cast<double>(r.n_s_as2[k]);
    r.curve.tau_ps[k] = static_cast<double>(grid_.center(k));
    if (n3 > 0 && n2 > 0) {
      const double g = n3 * ns / (nh * n2);
      r.curve.g2[k] = g;
      r.curve.sigma[k] = g * std::sqrt(1.0 / n3 + 1.0 / nh + 1.0 / n2);
    } else {
      r.curve.g2[k] = 0.0;
      r.curve.sigma[k] = ns / (nh * std::max(n2, 1.0));
    }
  }
  return r;
}

ConditionalResult conditional_g2(const TimeTagStream& s, const TimeTagStream& as1,
                                 const TimeTagStream& as2, Picoseconds window_ps,
                                 std::optional<Picoseconds> tau_star_ps, const DelayGrid& grid) {
  if (s.duration_ps() != as1.duration_ps() || s.duration_ps() != as2.duration_ps()) {
    throw Error(Errc::duration_mismatch, "conditional streams must share a duration");
  }
  if (s.empty() || as1.empty() || as2.empty()) {
    throw Error(Errc::empty_stream, "conditional correlation needs three non-empty streams");
  }
  ConditionalAccumulator acc(grid);
  acc.push(s.tags(), as1.tags(), as2.tags(), static_cast<TimeTag>(s.duration_ps()));
  acc.finish();
  return acc.result(window_ps, tau_star_ps);
}

PeakMetrics peak_metrics(const G2Curve& c) {
  if (c.size() == 0) throw Error(Errc::flat_curve, "empty curve");
  std::size_t p = 0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c.g2[i] > c.g2[p] ||
        (c.g2[i] == c.g2[p] && std::abs(c.tau_ps[i]) < std::abs(c.tau_ps[p]))) {
      p = i;
    }
  }
  if (!(c.g2[p] > 1.0)) throw Error(Errc::flat_curve, "no peak above the baseline of 1");
  const double half = 1.0 + (c.g2[p] - 1.0) / 2.0;
  auto crossing = [&](std::size_t inner, std::size_t outer) {
    const double f = (half - c.g2[inner]) / (c.g2[outer] - c.g2[inner]);
    return c.tau_ps[inner] + f * (c.tau_ps[outer] - c.tau_ps[inner]);
  };
  std::optional<double> left;
  for (std::size_t i = p; i-- > 0;) {
    if (c.g2[i] <= half) {
      left = crossing(i + 1, i);
      break;
    }
  }
  std::optional<double> right;
  for (std::size_t i = p + 1; i < c.size(); ++i) {
    if (c.g2[i] <= half) {
      right = crossing(i - 1, i);
      break;
    }
  }
  if (!left || !right) throw Error(Errc::flat_curve, "peak flank does not reach half maximum");
  return {c.tau_ps[p], c.g2[p], c.sigma[p], *right - *left};
}

DipMetrics dip_metrics(const G2Curve& c, double tau_ps) {
  if (c.size() == 0) throw Error(Errc::flat_curve, "empty curve");
  std::size_t p = 0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (std::abs(c.tau_ps[i] - tau_ps) < std::abs(c.tau_ps[p] - tau_ps)) p = i;
  }
  if (!(c.g2[p] < 1.0)) throw Error(Errc::flat_curve, "no dip below the baseline of 1");
  const double level = 1.0 - (1.0 - c.g2[p]) / 2.0;
  auto crossing = [&](std::size_t inner, std::size_t outer) {
    const double f = (level - c.g2[inner]) / (c.g2[outer] - c.g2[inner]);
    return c.tau_ps[inner] + f * (c.tau_ps[outer] - c.tau_ps[inner]);
  };
  std::optional<double> left;
  for (std::size_t i = p; i-- > 0;) {
    if (c.g2[i] >= level) {
      left = crossing(i + 1, i);
      break;
    }
  }
  std::optional<double> right;
  for (std::size_t i = p + 1; i < c.size(); ++i) {
    if (c.g2[i] >= level) {
      right = crossing(i - 1, i);
      break;
    }
  }
  if (!left || !right) throw Error(Errc::flat_curve, "dip flank does not recover to half depth");
  return {c.tau_ps[p], c.g2[p], c.sigma[p], *right - *left};
}

Measured cs_factor(Measured g2_sas_peak, Measured g2_ss_0, Measured g2_asas_0) {
  if (!(g2_ss_0.value > 0.0) || !(g2_asas_0.value > 0.0) || !(g2_sas_peak.value > 0.0)) {
    throw Error(Errc::nonpositive_input, "Cauchy-Schwarz factor needs positive correlations");
  }
  const double f = g2_sas_peak.value * g2_sas_peak.value / (g2_ss_0.value * g2_asas_0.value);
  const double r_sas = 2.0 * g2_sas_peak.sigma / g2_sas_peak.value;
  const double r_ss = g2_ss_0.sigma / g2_ss_0.value;
  const double r_asas = g2_asas_0.sigma / g2_asas_0.value;
  return {f, f * std::sqrt(r_sas * r_sas + r_ss * r_ss + r_asas * r_asas)};
}

double heralding_efficiency(double n_pairs, double n_s) {
  if (!(n_s > 0.0)) throw Error(Errc::zero_trigger, "no trigger detections");
  if (n_pairs < 0.0) throw Error(Errc::bad_args, "negative pair count");
  const double eta = n_pairs / n_s;
  if (eta > 1.0) {
    throw Error(Errc::invariant_violation,
                "heralding efficiency " + std::to_string(eta) + " exceeds one");
  }
  return eta;
}

}  // namespace pairsim
