#include "pairsim/sweep.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "pairsim/error.hpp"

namespace pairsim {

SweepAxis parse_axis(const std::string& name) {
  if (name == "power") return SweepAxis::power;
  if (name == "od") return SweepAxis::od;
  throw Error(Errc::bad_args, "sweep axis must be power or od, got " + name);
}

std::string to_string(SweepAxis axis) { return axis == SweepAxis::power ? "power" : "od"; }

SimulatedRun simulate_and_analyze(const ExperimentConfig& cfg, const AnalysisConfig& acfg) {
  ExperimentEngine engine(cfg);
  StreamAnalyzer analyzer(experiment_channels(cfg), engine.duration_ps(), acfg);
  Chunk chunk;
  while (engine.next(chunk)) analyzer.push(chunk.tags, chunk.horizon);
  return {analyzer.finish(), engine.counters()};
}

ExperimentConfig sweep_point_config(const ExperimentConfig& base, SweepAxis axis, double value,
                                    std::size_t index) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw Error(Errc::bad_args, "sweep values must be finite and >= 0");
  }
  ExperimentConfig cfg = base;
  const double power = axis == SweepAxis::power ? value : base.source.power_mw;
  const double od = axis == SweepAxis::od ? value : base.source.od;
  cfg.source = at_operating_point(base.source, power, od);
  cfg.seed = derive_seed(base.seed, index);
  return cfg;
}

std::optional<double> loglog_slope(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) return std::nullopt;
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) return std::nullopt;
  return sxy / sxx;
}

SweepResult run_sweep(const ExperimentConfig& base, const AnalysisConfig& acfg, SweepAxis axis,
                      std::span<const double> values) {
  if (values.empty()) throw Error(Errc::bad_args, "sweep needs at least one value");
  SweepResult res;
  res.axis = axis;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto cfg = sweep_point_config(base, axis, values[i], i);
    auto run = simulate_and_analyze(cfg, acfg);
    const auto& r = run.analysis.report;
    SweepRow row;
    row.value = values[i];
    row.seed = cfg.seed;
    row.rate_s = r.rate_s.value;
    row.rate_as = r.rate_as.value;
    row.pair_rate = r.net_pair_rate.value;
    row.pair_rate_total = r.pair_rate.value;
    row.g2_sas_peak = r.g2_sas_peak.value;
    row.report = r;
    row.counters = run.counters;
    res.rows.push_back(std::move(row));
  }
  std::vector<double> x, s, a, p;
  for (const auto& row : res.rows) {
    x.push_back(row.value);
    s.push_back(row.rate_s);
    a.push_back(row.rate_as);
    p.push_back(row.pair_rate);
  }
  res.slope_rate_s = loglog_slope(x, s);
  res.slope_rate_as = loglog_slope(x, a);
  res.slope_pair_rate = loglog_slope(x, p);
  return res;
}

void write_sweep_csv(const SweepResult& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot write " + path.string());
  out << std::setprecision(10);
  out << to_string(r.axis) << ",seed,rate_s,rate_as,pair_rate,pair_rate_total,g2_sas_peak\n";
  for (const auto& row : r.rows) {
    out << row.value << ',' << row.seed << ',' << row.rate_s << ',' << row.rate_as << ','
        << row.pair_rate << ',' << row.pair_rate_total << ',' << row.g2_sas_peak << '\n';
  }
  auto slope = [&](const char* name, const std::optional<double>& v) {
    out << "# slope_" << name << '=';
    if (v) out << *v;
    else out << "nan";
    out << '\n';
  };
  slope("rate_s", r.slope_rate_s);
  slope("rate_as", r.slope_rate_as);
  slope("pair_rate", r.slope_pair_rate);
  if (!out) throw Error(Errc::io_failure, "write failed on " + path.string());
}

}  // namespace pairsim
