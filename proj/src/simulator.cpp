#include "pairsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pairsim/config.hpp"
#include "pairsim/error.hpp"

namespace pairsim {
namespace {

constexpr double kFwhmToSigma = 1.0 / 2.3548200450309493;  // 1 / (2 sqrt(2 ln 2))
constexpr double kJitterCut = 8.0;  // Gaussian jitter truncated at +-8 sigma

// Sub-stream ids for make_rng; each random source owns one.
enum : std::uint64_t {
  kStreamTrace = 1,
  kStreamPairs,
  kStreamBackground,
  kStreamFilter,
  kStreamDetector,
  kStreamDark,
  kStreamCox = 0x100,
  kStreamBgS,
  kStreamBgAs,
  kStreamEngineDark = 0x200,
};

double truncated_normal(Rng& rng) {
  for (;;) {
    const double z = std_normal(rng);
    if (std::abs(z) <= kJitterCut) return z;
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::invariant_violation, what);
}

void check_probability(double p, const std::string& name) {
  require(p >= 0.0 && p <= 1.0, name + " must lie in [0, 1]");
}

void check_detector(const DetectorParams& d, const std::string& name) {
  check_probability(d.efficiency, name + ".efficiency");
  require(d.jitter_fwhm_ps >= 0.0 && std::isfinite(d.jitter_fwhm_ps),
          name + ".jitter_fwhm_ps must be >= 0");
  require(d.dead_time_ps >= 0.0 && std::isfinite(d.dead_time_ps),
          name + ".dead_time_ps must be >= 0");
  require(d.dark_rate_hz >= 0.0 && std::isfinite(d.dark_rate_hz),
          name + ".dark_rate_hz must be >= 0");
}

void check_filter(const FilterParams& f, const std::string& name) {
  require(f.fwhm_ghz > 0.0, name + ".fwhm_ghz must be > 0");
  check_probability(f.peak_transmission, name + ".peak_transmission");
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  const auto& s = cfg.source;
  for (auto [v, name] : {std::pair{s.pair_rate_hz, "source.pair_rate_hz"},
                         std::pair{s.bg_s_hz, "source.bg_s_hz"},
                         std::pair{s.bg_as_hz, "source.bg_as_hz"},
                         std::pair{s.power_mw, "source.power_mw"},
                         std::pair{s.od, "source.od"}, std::pair{s.c_s, "source.c_s"},
                         std::pair{s.c_pair, "source.c_pair"},
                         std::pair{s.c_as, "source.c_as"}}) {
    require(v >= 0.0 && std::isfinite(v), std::string(name) + " must be finite and >= 0");
  }
  require(s.tau_as_ps > 0.0 && std::isfinite(s.tau_as_ps), "source.tau_as_ps must be > 0");
  require(s.tau_coh_ps > 0.0, "source.tau_coh_ps must be > 0");
  check_probability(s.collection_s, "source.collection_s");
  check_probability(s.collection_as, "source.collection_as");
  check_filter(cfg.filter_s, "filter_s");
  check_filter(cfg.filter_as, "filter_as");
  check_detector(cfg.det_s, "det_s");
  check_detector(cfg.det_as1, "det_as1");
  check_detector(cfg.det_as2, "det_as2");
  require(cfg.duration_s > 0.0 && cfg.duration_s * kPsPerSecond < 9.2e18,
          "duration_s must be > 0");
  require(cfg.intensity_cap > 1.0, "intensity_cap must exceed 1");
}

SourceParams at_operating_point(const SourceParams& src, double power_mw, double od) {
  SourceParams out = src;
  out.power_mw = power_mw;
  out.od = od;
  out.pair_rate_hz = src.c_pair * power_mw * od * od;
  out.bg_s_hz = src.c_s * power_mw;
  out.bg_as_hz = src.c_as * od;
  return out;
}

std::vector<ChannelId> experiment_channels(const ExperimentConfig& cfg) {
  std::vector<ChannelId> ch{channel::stokes, channel::anti_stokes};
  if (cfg.hbt_on_as) ch.push_back(channel::anti_stokes_2);
  if (cfg.hbt_on_s) ch.push_back(channel::stokes_2);
  return ch;
}

Picoseconds duration_ps(const ExperimentConfig& cfg) {
  return static_cast<Picoseconds>(std::llround(cfg.duration_s * kPsPerSecond));
}

// ---------------------------------------------------------------------------

double IntensityTrace::at(double t_ps) const {
  if (values.empty()) return 0.0;
  const double i = std::floor(t_ps / dt_ps);
  if (i <= 0.0) return values.front();
  const auto k = static_cast<std::size_t>(i);
  return k < values.size() ? values[k] : values.back();
}

double IntensityTrace::max() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

IntensityTrace sample_intensity(double tau_coh_ps, Picoseconds duration_ps, double dt_ps,
                                std::uint64_t seed) {
  if (!(tau_coh_ps > 0.0) || !(dt_ps > 0.0) || duration_ps <= 0) {
    throw Error(Errc::invalid_range, "intensity trace needs positive tau_coh, dt and duration");
  }
  if (std::isfinite(tau_coh_ps) && dt_ps > tau_coh_ps / 10.0) {
    throw Error(Errc::grid_too_coarse, "dt must not exceed tau_coh / 10");
  }
  Rng rng = make_rng(seed, kStreamTrace);
  IntensityTrace trace;
  trace.dt_ps = dt_ps;
  const auto n = static_cast<std::size_t>(std::ceil(static_cast<double>(duration_ps) / dt_ps));
  if (!std::isfinite(tau_coh_ps)) {
    trace.values.assign(n, std_exponential(rng));
    return trace;
  }
  const double rho = std::exp(-dt_ps / tau_coh_ps);
  const double kick = std::sqrt((1.0 - rho * rho) / 2.0);
  double x = std_normal(rng) * std::numbers::sqrt2 / 2.0;
  double y = std_normal(rng) * std::numbers::sqrt2 / 2.0;
  trace.values.resize(n);
  for (auto& v : trace.values) {
    v = x * x + y * y;
    x = rho * x + kick * std_normal(rng);
    y = rho * y + kick * std_normal(rng);
  }
  return trace;
}

PairEmissions generate_pairs(const SourceParams& src, const IntensityTrace& intensity,
                             Picoseconds duration_ps, std::uint64_t seed) {
  PairEmissions out;
  const double cap = intensity.max();
  if (src.pair_rate_hz <= 0.0 || cap <= 0.0) return out;
  Rng rng = make_rng(seed, kStreamPairs);
  const double mean_gap = kPsPerSecond / (src.pair_rate_hz * cap);
  const auto T = static_cast<double>(duration_ps);
  for (double t = mean_gap * std_exponential(rng); t < T; t += mean_gap * std_exponential(rng)) {
    if (uniform01(rng) * cap >= intensity.at(t)) continue;
    out.s.push_back(t);
    out.as.push_back(t + src.tau_as_ps * std_exponential(rng));
  }
  return out;
}

std::vector<double> add_background(std::vector<double> events, double rate_hz,
                                   const IntensityTrace* intensity, Picoseconds duration_ps,
                                   std::uint64_t seed) {
  if (rate_hz < 0.0) throw Error(Errc::invalid_range, "background rate must be >= 0");
  if (rate_hz == 0.0) return events;
  Rng rng = make_rng(seed, kStreamBackground);
  const double cap = intensity ? intensity->max() : 1.0;
  if (cap <= 0.0) return events;
  const double mean_gap = kPsPerSecond / (rate_hz * cap);
  const auto T = static_cast<double>(duration_ps);
  for (double t = mean_gap * std_exponential(rng); t < T; t += mean_gap * std_exponential(rng)) {
    if (intensity && uniform01(rng) * cap >= intensity->at(t)) continue;
    events.push_back(t);
  }
  std::sort(events.begin(), events.end());
  return events;
}

std::vector<double> apply_filter(std::span<const double> events, const FilterParams& f,
                                 std::uint64_t seed) {
  check_filter(f, "filter");
  Rng rng = make_rng(seed, kStreamFilter);
  const double tau = filter_time_constant_ps(f);
  std::vector<double> out;
  out.reserve(events.size());
  for (double e : events) {
    if (uniform01(rng) >= f.peak_transmission) continue;
    out.push_back(e + tau * std_exponential(rng));
  }
  return out;
}

TimeTagStream apply_detector(std::span<const double> events, const DetectorParams& d,
                             ChannelId channel, Picoseconds duration_ps, std::uint64_t seed) {
  check_detector(d, "detector");
  Rng rng = make_rng(seed, kStreamDetector);
  const double sigma = d.jitter_fwhm_ps * kFwhmToSigma;
  const auto T = static_cast<double>(duration_ps);
  std::vector<double> hits;
  hits.reserve(events.size());
  for (double e : events) {
    if (uniform01(rng) >= d.efficiency) continue;
    hits.push_back(sigma > 0.0 ? e + sigma * truncated_normal(rng) : e);
  }
  if (d.dark_rate_hz > 0.0) {
    Rng dark = make_rng(seed, kStreamDark);
    const double gap = kPsPerSecond / d.dark_rate_hz;
    for (double t = gap * std_exponential(dark); t < T; t += gap * std_exponential(dark)) {
      hits.push_back(t);
    }
  }
  std::sort(hits.begin(), hits.end());
  std::vector<TimeTag> tags;
  tags.reserve(hits.size());
  for (double h : hits) {
    if (h < 0.0 || h >= T) continue;
    const auto tag = static_cast<TimeTag>(std::floor(h));
    if (!tags.empty() && static_cast<double>(tag - tags.back()) < d.dead_time_ps) continue;
    tags.push_back(tag);
  }
  return TimeTagStream(channel, std::move(tags), duration_ps);
}

// ---------------------------------------------------------------------------

namespace {

constexpr int kNone = -1;

struct Outcome {
  int s_ch = kNone;   // detector channel of the S photon, if detected
  int as_ch = kNone;  // detector channel of the AS photon, if detected
  bool pair = false;  // AS carries the intrinsic delay
};

class OutcomeTable {
 public:
  void add(double weight, Outcome o) {
    if (weight <= 0.0) return;
    total_ += weight;
    cum_.push_back(total_);
    out_.push_back(o);
  }
  double total() const { return total_; }
  bool empty() const { return out_.empty(); }
  const Outcome& pick(double u) const {
    const double x = u * total_;
    for (std::size_t i = 0; i + 1 < cum_.size(); ++i) {
      if (x < cum_[i]) return out_[i];
    }
    return out_.back();
  }

 private:
  double total_ = 0.0;
  std::vector<double> cum_;
  std::vector<Outcome> out_;
};

// Keeps a buffer sorted when values arrive nearly in order.
void insert_sorted(std::vector<double>& buf, double t) {
  buf.push_back(t);
  for (std::size_t i = buf.size() - 1; i > 0 && buf[i - 1] > buf[i]; --i) {
    std::swap(buf[i - 1], buf[i]);
  }
}

// Per-channel detection probabilities of one photon arriving at a filter.
struct ArmRouting {
  std::array<double, 4> p{};  // by channel id
};

}  // namespace

struct ExperimentEngine::Impl {
  struct Source {
    Rng rng;
    double mean_gap = 0.0;  // ps between candidates
    double next_t = 0.0;
    bool cox = false;
    double cap = 1.0;
    double tau_coh = 0.0;
    double x = 0.0, y = 0.0, t_state = 0.0;
    OutcomeTable table;
    std::array<std::vector<double>, 4> buf;
  };
  struct Detector {
    bool present = false;
    double sigma = 0.0;
    double dead = 0.0;
    double dark_gap = 0.0;
    double next_dark = 0.0;
    Rng dark_rng;
    std::vector<double> dark_buf;
    bool has_last = false;
    TimeTag last = 0;
  };

  ExperimentConfig cfg;
  Picoseconds duration = 0;
  double block_ps = 0.0;
  double guard = 0.0;
  double emit_end = 0.0;
  double t_block = 0.0;
  double tau_fs = 0.0, tau_fa = 0.0;
  std::vector<Source> sources;
  std::array<Detector, 4> det;
  EngineCounters counters;
  bool done = false;
  std::vector<double> merged, scratch;

  void generate(Source& src, double t_end) {
    while (src.next_t < t_end) {
      const double t = src.next_t;
      src.next_t += src.mean_gap * std_exponential(src.rng);
      if (src.cox) {
        const double rho = std::exp(-(t - src.t_state) / src.tau_coh);
        const double kick = std::sqrt((1.0 - rho * rho) / 2.0);
        src.x = rho * src.x + kick * std_normal(src.rng);
        src.y = rho * src.y + kick * std_normal(src.rng);
        src.t_state = t;
        if (uniform01(src.rng) * src.cap >= src.x * src.x + src.y * src.y) continue;
      }
      ++counters.emissions;
      const Outcome& o = src.table.pick(uniform01(src.rng));
      if (o.s_ch != kNone) {
        emit(src, o.s_ch, t + tau_fs * std_exponential(src.rng));
        if (o.pair) ++counters.pair_photons_s;
        else ++counters.background_photons;
      }
      if (o.as_ch != kNone) {
        double ta = t;
        if (o.pair) ta += cfg.source.tau_as_ps * std_exponential(src.rng);
        emit(src, o.as_ch, ta + tau_fa * std_exponential(src.rng));
        if (o.pair) ++counters.pair_photons_as;
        else ++counters.background_photons;
      }
    }
  }

  void emit(Source& src, int ch, double t) {
    const auto& d = det[static_cast<std::size_t>(ch)];
    if (d.sigma > 0.0) t += d.sigma * truncated_normal(src.rng);
    if (t < 0.0 || t >= static_cast<double>(duration)) return;
    insert_sorted(src.buf[static_cast<std::size_t>(ch)], t);
  }

  void generate_dark(Detector& d, double t_end) {
    while (d.next_dark < t_end) {
      if (d.next_dark >= 0.0 && d.next_dark < static_cast<double>(duration)) {
        d.dark_buf.push_back(d.next_dark);
        ++counters.dark_counts;
      }
      d.next_dark += d.dark_gap * std_exponential(d.dark_rng);
    }
  }

  // Moves every buffered time below `horizon` into out, applying dead time.
  void release(std::size_t ch, double horizon, std::vector<TimeTag>& out) {
    merged.clear();
    auto take = [&](std::vector<double>& buf) {
      const auto end = std::lower_bound(buf.begin(), buf.end(), horizon);
      scratch.clear();
      std::merge(merged.begin(), merged.end(), buf.begin(), end, std::back_inserter(scratch));
      merged.swap(scratch);
      buf.erase(buf.begin(), end);
    };
    for (auto& s : sources) take(s.buf[ch]);
    auto& d = det[ch];
    take(d.dark_buf);
    out.clear();
    for (double t : merged) {
      const auto tag = static_cast<TimeTag>(std::floor(t));
      if (d.has_last && static_cast<double>(tag - d.last) < d.dead) {
        ++counters.dead_time_losses;
        continue;
      }
      d.has_last = true;
      d.last = tag;
      out.push_back(tag);
    }
    counters.detected[ch] += out.size();
  }
};

ExperimentEngine::ExperimentEngine(const ExperimentConfig& cfg, double block_s)
    : impl_(std::make_unique<Impl>()) {
  validate(cfg);
  if (!(block_s > 0.0)) throw Error(Errc::bad_args, "block length must be positive");
  auto& m = *impl_;
  m.cfg = cfg;
  m.duration = pairsim::duration_ps(cfg);
  m.block_ps = block_s * kPsPerSecond;
  m.tau_fs = filter_time_constant_ps(cfg.filter_s);
  m.tau_fa = filter_time_constant_ps(cfg.filter_as);
  const auto& src = cfg.source;

  // Detectors, by channel id.
  const DetectorParams* params[4] = {&cfg.det_s, &cfg.det_as1, &cfg.det_as2, &cfg.det_s};
  for (ChannelId id : experiment_channels(cfg)) {
    auto& d = m.det[id.value];
    d.present = true;
    d.sigma = params[id.value]->jitter_fwhm_ps * kFwhmToSigma;
    d.dead = params[id.value]->dead_time_ps;
    d.dark_rng = make_rng(cfg.seed, kStreamEngineDark + id.value);
    if (params[id.value]->dark_rate_hz > 0.0) {
      d.dark_gap = kPsPerSecond / params[id.value]->dark_rate_hz;
      d.next_dark = d.dark_gap * std_exponential(d.dark_rng);
    } else {
      d.next_dark = std::numeric_limits<double>::infinity();
    }
  }
  double max_sigma = 0.0;
  for (const auto& d : m.det) max_sigma = std::max(max_sigma, d.sigma);
  m.guard = kJitterCut * max_sigma + 2.0;

  // Detection probability per channel of a photon entering each filter.
  ArmRouting s_arm, as_arm;
  const double ts = cfg.filter_s.peak_transmission;
  const double ta = cfg.filter_as.peak_transmission;
  if (cfg.hbt_on_s) {
    s_arm.p[0] = ts * 0.5 * cfg.det_s.efficiency;
    s_arm.p[3] = ts * 0.5 * cfg.det_s.efficiency;
  } else {
    s_arm.p[0] = ts * cfg.det_s.efficiency;
  }
  if (cfg.hbt_on_as) {
    as_arm.p[1] = ta * 0.5 * cfg.det_as1.efficiency;
    as_arm.p[2] = ta * 0.5 * cfg.det_as2.efficiency;
  } else {
    as_arm.p[1] = ta * cfg.det_as1.efficiency;
  }

  auto pair_table = [&](OutcomeTable& table, double rate) {
    double s_lost = 1.0, as_lost = 1.0;
    for (double p : s_arm.p) s_lost -= src.collection_s * p;
    for (double p : as_arm.p) as_lost -= src.collection_as * p;
    for (int i = -1; i < 4; ++i) {
      const double ps = i < 0 ? s_lost : src.collection_s * s_arm.p[static_cast<std::size_t>(i)];
      for (int j = -1; j < 4; ++j) {
        if (i < 0 && j < 0) continue;
        const double pa =
            j < 0 ? as_lost : src.collection_as * as_arm.p[static_cast<std::size_t>(j)];
        table.add(rate * ps * pa, Outcome{i, j, true});
      }
    }
  };
  auto background_table = [&](OutcomeTable& table, double rate, const ArmRouting& arm,
                              bool s_side) {
    for (int i = 0; i < 4; ++i) {
      const double p = arm.p[static_cast<std::size_t>(i)];
      table.add(rate * p, s_side ? Outcome{i, kNone, false} : Outcome{kNone, i, false});
    }
  };

  const double preroll = 50.0 * (src.tau_as_ps + m.tau_fs + m.tau_fa) + 2.0 * m.guard + 1000.0;
  const double t_start = -preroll;
  auto make_source = [&](std::uint64_t stream, bool cox) {
    Impl::Source s;
    s.rng = make_rng(cfg.seed, stream);
    s.cox = cox;
    s.cap = cfg.intensity_cap;
    s.tau_coh = src.tau_coh_ps;
    s.t_state = t_start;
    s.x = std_normal(s.rng) * std::numbers::sqrt2 / 2.0;
    s.y = std_normal(s.rng) * std::numbers::sqrt2 / 2.0;
    return s;
  };
  auto start = [&](Impl::Source& s) {
    if (s.table.empty()) return false;
    const double rate = s.table.total() * (s.cox ? s.cap : 1.0);
    s.mean_gap = kPsPerSecond / rate;
    s.next_t = t_start + s.mean_gap * std_exponential(s.rng);
    return true;
  };

  auto cox = make_source(kStreamCox, true);
  pair_table(cox.table, src.pair_rate_hz);
  if (src.modulated_backgrounds) {
    background_table(cox.table, src.bg_s_hz, s_arm, true);
    background_table(cox.table, src.bg_as_hz, as_arm, false);
  }
  if (start(cox)) m.sources.push_back(std::move(cox));
  if (!src.modulated_backgrounds) {
    auto bg_s = make_source(kStreamBgS, false);
    background_table(bg_s.table, src.bg_s_hz, s_arm, true);
    if (start(bg_s)) m.sources.push_back(std::move(bg_s));
    auto bg_as = make_source(kStreamBgAs, false);
    background_table(bg_as.table, src.bg_as_hz, as_arm, false);
    if (start(bg_as)) m.sources.push_back(std::move(bg_as));
  }
  m.emit_end = static_cast<double>(m.duration) + m.guard;
  m.t_block = t_start;
}

ExperimentEngine::~ExperimentEngine() = default;

const EngineCounters& ExperimentEngine::counters() const noexcept { return impl_->counters; }

Picoseconds ExperimentEngine::duration_ps() const noexcept { return impl_->duration; }

bool ExperimentEngine::next(Chunk& chunk) {
  auto& m = *impl_;
  if (m.done) return false;
  const double t1 = std::min(m.t_block + m.block_ps, m.emit_end);
  for (auto& s : m.sources) m.generate(s, t1);
  for (auto& d : m.det) {
    if (d.present) m.generate_dark(d, std::min(t1, static_cast<double>(m.duration)));
  }
  m.t_block = t1;
  const bool last = t1 >= m.emit_end;
  const double horizon =
      last ? static_cast<double>(m.duration)
           : std::clamp(std::floor(t1 - m.guard), 0.0, static_cast<double>(m.duration));
  chunk.horizon = static_cast<TimeTag>(horizon);
  for (std::size_t ch = 0; ch < 4; ++ch) {
    if (m.det[ch].present) {
      m.release(ch, horizon, chunk.tags[ch]);
    } else {
      chunk.tags[ch].clear();
    }
  }
  m.done = last;
  return true;
}

StreamSet simulate_experiment(const ExperimentConfig& cfg) {
  ExperimentEngine engine(cfg);
  std::array<std::vector<TimeTag>, 4> all;
  Chunk chunk;
  while (engine.next(chunk)) {
    for (std::size_t ch = 0; ch < 4; ++ch) {
      all[ch].insert(all[ch].end(), chunk.tags[ch].begin(), chunk.tags[ch].end());
    }
  }
  StreamSet set(engine.duration_ps());
  for (ChannelId id : experiment_channels(cfg)) {
    set.add(TimeTagStream(id, std::move(all[id.value]), set.duration_ps()));
  }
  set.metadata()["seed"] = std::to_string(cfg.seed);
  set.metadata()["config_hash"] = config_hash(cfg);
  return set;
}

}  // namespace pairsim
