#include "pairsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>

#include "pairsim/error.hpp"
#include "pairsim/physics.hpp"

namespace pairsim {
namespace {

DelayGrid fine_grid_for(const AnalysisConfig& cfg) {
  const auto g = DelayGrid::symmetric(cfg.bin_ps, cfg.range_ps);
  return DelayGrid(1, g.lowest_delay(), g.highest_delay() + 1);
}

void merge_into(std::vector<TimeTag>& out, const std::vector<TimeTag>& a,
                const std::vector<TimeTag>* b) {
  out.clear();
  if (!b) {
    out.assign(a.begin(), a.end());
    return;
  }
  std::merge(a.begin(), a.end(), b->begin(), b->end(), std::back_inserter(out));
}

void split_into(BernoulliRouter& router, const std::vector<TimeTag>& in,
                std::vector<TimeTag>& a, std::vector<TimeTag>& b) {
  a.clear();
  b.clear();
  for (TimeTag t : in) (router.next() ? a : b).push_back(t);
}

Measured value_at_zero(const G2Curve& c) {
  const auto i = c.index_at(0.0);
  if (!i) return {};
  return {c.g2[*i], c.sigma[*i]};
}

G2Curve normalize_or_zero(const CorrelationHistogram& h) {
  if (h.n_a > 0 && h.n_b > 0) return normalize_g2(h);
  G2Curve c;
  const auto grid = h.grid();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    c.tau_ps.push_back(static_cast<double>(grid.center(i)));
  }
  c.g2.assign(grid.size(), 0.0);
  c.sigma.assign(grid.size(), 0.0);
  return c;
}

bool has_channel(std::span<const ChannelId> channels, ChannelId id) {
  return std::find(channels.begin(), channels.end(), id) != channels.end();
}

}  // namespace

StreamAnalyzer::StreamAnalyzer(std::span<const ChannelId> channels, Picoseconds duration_ps,
                               const AnalysisConfig& cfg)
    : cfg_(cfg),
      duration_(duration_ps),
      has_s2_(has_channel(channels, channel::stokes_2)),
      has_as2_(has_channel(channels, channel::anti_stokes_2)),
      fine_(fine_grid_for(cfg)),
      ss_(DelayGrid::symmetric(cfg.bin_ps, cfg.range_ps)),
      asas_(DelayGrid::symmetric(cfg.bin_ps, cfg.range_ps)),
      split_s_(0.5, derive_seed(cfg.split_seed, 1)),
      split_as_(0.5, derive_seed(cfg.split_seed, 2)) {
  if (!has_channel(channels, channel::stokes) || !has_channel(channels, channel::anti_stokes)) {
    throw Error(Errc::missing_channel, "analysis needs channels 0 (S) and 1 (AS)");
  }
  if (has_as2_) cond_.emplace(DelayGrid::symmetric(cfg.bin_ps, cfg.range_ps));
}

void StreamAnalyzer::push(const std::array<std::vector<TimeTag>, 4>& tags, TimeTag horizon) {
  const auto& s1 = tags[channel::stokes.value];
  const auto& as1 = tags[channel::anti_stokes.value];
  const auto& as2 = tags[channel::anti_stokes_2.value];
  const auto& s2 = tags[channel::stokes_2.value];
  merge_into(s_, s1, has_s2_ ? &s2 : nullptr);
  merge_into(as_, as1, has_as2_ ? &as2 : nullptr);
  n_s_ += s_.size();
  n_as_ += as_.size();
  fine_.push(s_, as_, horizon);
  if (has_s2_) {
    ss_.push(s1, s2, horizon);
  } else {
    split_into(split_s_, s1, a_, b_);
    ss_.push(a_, b_, horizon);
  }
  if (has_as2_) {
    asas_.push(as1, as2, horizon);
    cond_->push(s_, as1, as2, horizon);
  } else {
    split_into(split_as_, as1, c_, d_);
    asas_.push(c_, d_, horizon);
  }
}

AnalysisResult StreamAnalyzer::finish() {
  fine_.finish();
  ss_.finish();
  asas_.finish();
  if (cond_) cond_->finish();
  if (n_s_ == 0 || n_as_ == 0) {
    throw Error(Errc::empty_stream, "S or AS channels recorded no detections");
  }
  const double T = static_cast<double>(duration_) / kPsPerSecond;
  const auto grid = DelayGrid::symmetric(cfg_.bin_ps, cfg_.range_ps);

  AnalysisResult res;
  const auto fine = fine_.histogram(duration_);
  res.sas = rebin(fine, grid);
  res.ss = ss_.histogram(duration_);
  res.asas = asas_.histogram(duration_);
  res.g2_sas = normalize_g2(res.sas);
  res.g2_ss = normalize_or_zero(res.ss);
  res.g2_asas = normalize_or_zero(res.asas);

  MetricsReport& r = res.report;
  r.duration_s = T;
  r.n_s = n_s_;
  r.n_as = n_as_;
  r.rate_s = {static_cast<double>(n_s_) / T, std::sqrt(static_cast<double>(n_s_)) / T};
  r.rate_as = {static_cast<double>(n_as_) / T, std::sqrt(static_cast<double>(n_as_)) / T};
  r.method_ss = has_s2_ ? "hbt" : "split";
  r.method_asas = has_as2_ ? "hbt" : "split";

  try {
    const auto peak = peak_metrics(res.g2_sas);
    r.g2_sas_peak = {peak.g2_peak, peak.g2_sigma};
    r.tau_peak_ps = peak.tau_peak_ps;
    r.fwhm_ps = peak.fwhm_ps;
  } catch (const Error& e) {
    if (e.code() != Errc::flat_curve) throw;
    std::size_t p = 0;
    for (std::size_t i = 1; i < res.g2_sas.size(); ++i) {
      const auto& c = res.g2_sas;
      if (c.g2[i] > c.g2[p] || (c.g2[i] == c.g2[p] && std::abs(c.tau_ps[i]) < std::abs(c.tau_ps[p]))) {
        p = i;
      }
    }
    r.g2_sas_peak = {res.g2_sas.g2[p], res.g2_sas.sigma[p]};
    r.tau_peak_ps = res.g2_sas.tau_ps[p];
  }
  r.g2_ss_0 = value_at_zero(res.g2_ss);
  r.g2_asas_0 = value_at_zero(res.g2_asas);
  if (r.g2_sas_peak.value > 0.0 && r.g2_ss_0.value > 0.0 && r.g2_asas_0.value > 0.0) {
    r.cs_factor = cs_factor(r.g2_sas_peak, r.g2_ss_0, r.g2_asas_0);
  }

  // Pairs within the measured FWHM (one bin when there is no peak).
  r.pair_window_ps = r.fwhm_ps.value_or(static_cast<double>(cfg_.bin_ps));
  r.pair_count = window_count(fine, r.tau_peak_ps, r.pair_window_ps);
  const double lo = std::ceil(r.tau_peak_ps - r.pair_window_ps / 2);
  const double hi = std::floor(r.tau_peak_ps + r.pair_window_ps / 2);
  const double delays = std::max(0.0, hi - lo + 1.0);
  const double ns = static_cast<double>(n_s_);
  const double nas = static_cast<double>(n_as_);
  const double acc = ns * nas * delays / static_cast<double>(duration_);
  const double pc = static_cast<double>(r.pair_count);
  r.pair_rate = {pc / T, std::sqrt(pc) / T};
  r.accidental_rate = {acc / T, acc * std::sqrt(1.0 / ns + 1.0 / nas) / T};
  r.net_pair_rate = {r.pair_rate.value - r.accidental_rate.value,
                     std::hypot(r.pair_rate.sigma, r.accidental_rate.sigma)};
  const double eta = heralding_efficiency(pc, ns);
  r.heralding_eta = Measured{eta, std::sqrt(eta * (1.0 - eta) / ns)};

  if (cond_) {
    try {
      auto c = cond_->result(cfg_.herald_window_ps, cfg_.tau_star_ps);
      const auto star = static_cast<double>(c.tau_star_ps);
      const auto i = c.curve.index_at(star);
      r.g2c_0 = Measured{c.curve.g2[*i], c.curve.sigma[*i]};
      r.g2c_tau_star_ps = star;
      r.n_herald = c.n_herald;
      if (r.g2_sas_peak.value > 0.0) {
        r.g2c_theory = theoretical_conditional_g2(r.g2_asas_0.value, r.g2_sas_peak.value);
      }
      try {
        r.g2c_dip_fwhm_ps = dip_metrics(c.curve, star).fwhm_ps;
      } catch (const Error& e) {
        if (e.code() != Errc::flat_curve) throw;
      }
      res.conditional = std::move(c);
    } catch (const Error& e) {
      if (e.code() != Errc::no_coincidences) throw;
    }
  }
  return res;
}

AnalysisResult analyze(const StreamSet& set, const AnalysisConfig& cfg) {
  std::vector<ChannelId> channels;
  for (const auto& s : set.streams()) channels.push_back(s.channel());
  StreamAnalyzer analyzer(channels, set.duration_ps(), cfg);
  std::array<std::vector<TimeTag>, 4> tags;
  for (const auto& s : set.streams()) {
    if (s.channel().value < 4) tags[s.channel().value].assign(s.tags().begin(), s.tags().end());
  }
  analyzer.push(tags, static_cast<TimeTag>(set.duration_ps()));
  return analyzer.finish();
}

void write_curve_csv(const G2Curve& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot write " + path.string());
  out << "tau_ps,g2,sigma\n" << std::setprecision(10);
  for (std::size_t i = 0; i < c.size(); ++i) {
    out << c.tau_ps[i] << ',' << c.g2[i] << ',' << c.sigma[i] << '\n';
  }
  if (!out) throw Error(Errc::io_failure, "write failed on " + path.string());
}

void write_histogram_csv(const CorrelationHistogram& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot write " + path.string());
  out << "tau_ps,counts,sigma\n" << std::setprecision(10);
  const auto grid = h.grid();
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << grid.center(i) << ',' << h.counts[i] << ','
        << std::sqrt(static_cast<double>(h.counts[i])) << '\n';
  }
  if (!out) throw Error(Errc::io_failure, "write failed on " + path.string());
}

}  // namespace pairsim
