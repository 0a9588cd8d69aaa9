#include "pairsim/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "pairsim/analysis.hpp"
#include "pairsim/config.hpp"
#include "pairsim/correlator.hpp"
#include "pairsim/oracle.hpp"
#include "pairsim/physics.hpp"
#include "pairsim/simulator.hpp"
#include "pairsim/sweep.hpp"
#include "pairsim/ttag_io.hpp"

namespace pairsim {
namespace fs = std::filesystem;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::schema_violation:
    case Errc::bad_args:
    case Errc::unknown_formula:
    case Errc::invalid_range:
    case Errc::invalid_threshold:
    case Errc::nonpositive_input:
    case Errc::target_exceeds_source:
    case Errc::grid_too_coarse:
      return exit_usage;
    case Errc::invariant_violation:
      return exit_internal;
    default:
      return exit_data;
  }
}

namespace {

struct Options {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::string format = "json";
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Json file_entry(const fs::path& p) {
  return Json{{"path", p.string()},
              {"size", static_cast<std::uint64_t>(fs::file_size(p))},
              {"sha256", sha256_file(p)}};
}

Json counters_json(const EngineCounters& c) {
  return Json{{"emissions", c.emissions},
              {"pair_photons_s", c.pair_photons_s},
              {"pair_photons_as", c.pair_photons_as},
              {"background_photons", c.background_photons},
              {"dark_counts", c.dark_counts},
              {"dead_time_losses", c.dead_time_losses},
              {"detected", c.detected}};
}

/// Writes `<stem>.manifest.json` naming every output with its size and hash.
fs::path write_manifest(const fs::path& path, const std::string& command,
                        const std::string& config_hash, std::optional<std::uint64_t> seed,
                        const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs,
                        double wall_s, Json counts) {
  Json m{{"tool", "pairsim"},
         {"version", kToolVersion},
         {"command", command},
         {"config_hash", config_hash},
         {"seed", seed ? Json(*seed) : Json(nullptr)},
         {"inputs", Json::array()},
         {"outputs", Json::array()},
         {"wall_clock_s", wall_s},
         {"counts", std::move(counts)}};
  for (const auto& p : inputs) m["inputs"].push_back(file_entry(p));
  for (const auto& p : outputs) m["outputs"].push_back(file_entry(p));
  std::ofstream f(path);
  f << m.dump(2) << '\n';
  if (!f) throw Error(Errc::io_failure, "cannot write " + path.string());
  return path;
}

fs::path manifest_path_for(const fs::path& output) {
  return output.parent_path() / (output.filename().string() + ".manifest.json");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_failure, "cannot create " + dir.string() + ": " + ec.message());
}

// Command-line overrides are arguments, not data.
void validate_overrides(const ExperimentConfig& cfg) {
  try {
    validate(cfg);
  } catch (const Error& e) {
    if (e.code() != Errc::invariant_violation) throw;
    throw Error(Errc::bad_args, e.what());
  }
}

RunConfig load_or_default(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return load_config(path);
}

std::string analysis_hash(const AnalysisConfig& a) {
  const std::string s = to_json(a).dump();
  return sha256_hex({reinterpret_cast<const unsigned char*>(s.data()), s.size()});
}

void print_report(const MetricsReport& r, const std::string& format, std::ostream& out) {
  const Json j = to_json(r);
  if (format == "json") {
    out << j.dump(2) << '\n';
    return;
  }
  out << "key,value,sigma\n";
  for (const auto& [k, v] : j.items()) {
    if (v.is_object()) {
      out << k << ',' << v["value"].dump() << ',' << v["sigma"].dump() << '\n';
    } else {
      out << k << ',' << (v.is_string() ? v.get<std::string>() : v.dump()) << ",\n";
    }
  }
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Options& o, std::optional<double> duration, std::ostream& out) {
  const auto t0 = Clock::now();
  if (o.config.empty()) throw Error(Errc::bad_args, "simulate needs --config");
  RunConfig rc = load_config(o.config);
  auto& cfg = rc.experiment;
  if (o.seed) cfg.seed = *o.seed;
  if (duration) cfg.duration_s = *duration;
  validate_overrides(cfg);
  const fs::path path = o.out.empty() ? fs::path("run.ttag") : fs::path(o.out);
  if (path.has_parent_path()) ensure_dir(path.parent_path());

  ExperimentEngine engine(cfg);
  std::uint16_t mask = 0;
  for (ChannelId id : experiment_channels(cfg)) mask |= static_cast<std::uint16_t>(1u << id.value);
  TtagWriter writer(path, mask, static_cast<std::uint64_t>(engine.duration_ps()));
  Chunk chunk;
  std::vector<TtagRecord> records;
  while (engine.next(chunk)) {
    records.clear();
    for (std::uint8_t ch = 0; ch < 4; ++ch) {
      for (TimeTag t : chunk.tags[ch]) records.push_back({ChannelId{ch}, t});
    }
    std::sort(records.begin(), records.end(), [](const TtagRecord& a, const TtagRecord& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.channel < b.channel;
    });
    writer.write(records);
  }
  writer.close();

  Json counts = counters_json(engine.counters());
  counts["records"] = writer.records_written();
  const auto manifest = write_manifest(manifest_path_for(path), "simulate", config_hash(cfg),
                                       cfg.seed, {fs::path(o.config)}, {path}, seconds_since(t0),
                                       counts);
  Json summary{{"output", path.string()},
               {"manifest", manifest.string()},
               {"records", writer.records_written()},
               {"config_hash", config_hash(cfg)}};
  if (o.format == "json") {
    out << summary.dump(2) << '\n';
  } else {
    out << "output,manifest,records,config_hash\n"
        << path.string() << ',' << manifest.string() << ',' << writer.records_written() << ','
        << config_hash(cfg) << '\n';
  }
  return exit_ok;
}

AnalysisResult analyze_file(const fs::path& path, const AnalysisConfig& acfg) {
  TtagReader reader(path);
  const auto& h = reader.header();
  std::vector<ChannelId> channels;
  for (std::uint8_t c = 0; c < 4; ++c) {
    if (h.declares(ChannelId{c})) channels.push_back(ChannelId{c});
  }
  StreamAnalyzer analyzer(channels, static_cast<Picoseconds>(h.duration_ps), acfg);
  std::array<std::vector<TimeTag>, 4> tags;
  std::vector<TtagRecord> batch, carry;
  while (!reader.done()) {
    batch.swap(carry);
    carry.clear();
    reader.read(batch, 1 << 20);
    // Records sharing the last timestamp may continue in the next batch.
    const TimeTag horizon = batch.back().timestamp;
    for (auto& t : tags) t.clear();
    for (const auto& r : batch) {
      if (r.timestamp >= horizon) {
        carry.push_back(r);
      } else if (r.channel.value < 4) {
        tags[r.channel.value].push_back(r.timestamp);
      }
    }
    batch.clear();
    analyzer.push(tags, horizon);
  }
  for (auto& t : tags) t.clear();
  for (const auto& r : carry) {
    if (r.channel.value < 4) tags[r.channel.value].push_back(r.timestamp);
  }
  analyzer.push(tags, static_cast<TimeTag>(h.duration_ps));
  return analyzer.finish();
}

int cmd_analyze(const Options& o, const std::string& input, std::ostream& out) {
  const auto t0 = Clock::now();
  const RunConfig rc = load_or_default(o.config);
  const auto res = analyze_file(input, rc.analysis);
  const fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
  ensure_dir(dir);
  std::vector<fs::path> outputs{dir / "report.json", dir / "g2_sas.csv", dir / "g2_ss.csv",
                                dir / "g2_asas.csv"};
  {
    std::ofstream f(outputs[0]);
    f << to_json(res.report).dump(2) << '\n';
    if (!f) throw Error(Errc::io_failure, "cannot write " + outputs[0].string());
  }
  write_curve_csv(res.g2_sas, outputs[1]);
  write_curve_csv(res.g2_ss, outputs[2]);
  write_curve_csv(res.g2_asas, outputs[3]);
  if (res.conditional) {
    outputs.push_back(dir / "g2c.csv");
    write_curve_csv(res.conditional->curve, outputs.back());
  }
  outputs.push_back(dir / "hist_sas.csv");
  write_histogram_csv(res.sas, outputs.back());
  Json counts{{"n_s", res.report.n_s}, {"n_as", res.report.n_as},
              {"pair_count", res.report.pair_count}, {"n_herald", res.report.n_herald}};
  write_manifest(dir / "analyze.manifest.json", "analyze", analysis_hash(rc.analysis), o.seed,
                 {fs::path(input)}, outputs, seconds_since(t0), counts);
  print_report(res.report, o.format, out);
  return exit_ok;
}

int cmd_sweep(const Options& o, const std::string& axis_name, const std::vector<double>& values,
              std::optional<double> duration, std::ostream& out) {
  const auto t0 = Clock::now();
  if (o.config.empty()) throw Error(Errc::bad_args, "sweep needs --config");
  const auto axis = parse_axis(axis_name);
  RunConfig rc = load_config(o.config);
  if (o.seed) rc.experiment.seed = *o.seed;
  if (duration) rc.experiment.duration_s = *duration;
  validate_overrides(rc.experiment);
  const fs::path dir = o.out.empty() ? fs::path("sweep") : fs::path(o.out);
  ensure_dir(dir);
  const auto res = run_sweep(rc.experiment, rc.analysis, axis, values);
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& row = res.rows[i];
    const auto cfg = sweep_point_config(rc.experiment, axis, row.value, i);
    const fs::path report = dir / ("point_" + std::to_string(i) + ".json");
    {
      Json j{{"axis", to_string(axis)},
             {"value", row.value},
             {"config", to_json(cfg)},
             {"report", to_json(row.report)}};
      std::ofstream f(report);
      f << j.dump(2) << '\n';
      if (!f) throw Error(Errc::io_failure, "cannot write " + report.string());
    }
    write_manifest(manifest_path_for(report), "sweep", config_hash(cfg), cfg.seed,
                   {fs::path(o.config)}, {report}, seconds_since(t0), counters_json(row.counters));
  }
  const fs::path table = dir / "sweep.csv";
  write_sweep_csv(res, table);
  write_manifest(manifest_path_for(table), "sweep", config_hash(rc.experiment), rc.experiment.seed,
                 {fs::path(o.config)}, {table}, seconds_since(t0),
                 Json{{"points", res.rows.size()}});
  if (o.format == "csv") {
    std::ifstream f(table);
    out << f.rdbuf();
  } else {
    Json j{{"axis", to_string(axis)}, {"table", table.string()}, {"rows", Json::array()}};
    for (const auto& row : res.rows) {
      j["rows"].push_back({{"value", row.value},
                           {"seed", row.seed},
                           {"rate_s", row.rate_s},
                           {"rate_as", row.rate_as},
                           {"pair_rate", row.pair_rate},
                           {"pair_rate_total", row.pair_rate_total},
                           {"g2_sas_peak", row.g2_sas_peak}});
    }
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    j["slope_rate_s"] = opt(res.slope_rate_s);
    j["slope_rate_as"] = opt(res.slope_rate_as);
    j["slope_pair_rate"] = opt(res.slope_pair_rate);
    out << j.dump(2) << '\n';
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------

struct CalcArgs {
  std::map<std::string, double> num;
  std::vector<double> jitter;
  std::string convention = "amplitude";

  double need(const std::string& key) const {
    auto it = num.find(key);
    if (it == num.end()) throw Error(Errc::bad_args, "missing --" + key);
    return it->second;
  }
  double get(const std::string& key, double fallback) const {
    auto it = num.find(key);
    return it == num.end() ? fallback : it->second;
  }
};

struct CalcValue {
  double value;
  std::string units;
  std::string formula;
};

CalcValue evaluate(const std::string& name, const CalcArgs& a) {
  constexpr double deg = std::numbers::pi / 180.0;
  if (name == "phase-mismatch") {
    return {phase_mismatch_length(a.need("dnu")), "m", "L = c / (2 dnu)"};
  }
  if (name == "overlap") {
    OverlapConvention conv;
    if (a.convention == "amplitude") conv = OverlapConvention::amplitude;
    else if (a.convention == "intensity") conv = OverlapConvention::intensity;
    else throw Error(Errc::bad_args, "--convention must be amplitude or intensity");
    return {overlap_length(a.need("angle-deg") * deg, a.need("diameter"), a.get("threshold", 0.5),
                           conv),
            "m", "exp(-(2 L tan(angle/2))^2 / (2 w^2)) = threshold, w = diameter / 2"};
  }
  if (name == "doppler") {
    return {doppler_sigma(a.need("t")), "Hz", "sigma_D = sqrt(kB T / m) / lambda"};
  }
  if (name == "doppler-temperature") {
    return {doppler_temperature(a.need("sigma")), "K", "T = m (sigma_D lambda)^2 / kB"};
  }
  if (name == "spinwave") {
    return {spinwave_coherence_time(a.need("angle-deg") * deg, a.need("t")), "s",
            "t = 1 / (2 k sin(angle/2) sqrt(2 kB T / m))"};
  }
  if (name == "filter-tau") {
    return {filter_time_constant_ps({a.need("fwhm-ghz"), 1.0}), "ps", "tau_f = 1 / (2 pi fwhm)"};
  }
  if (name == "cross-fwhm") {
    std::vector<double> j = a.jitter.empty() ? std::vector<double>{350, 350} : a.jitter;
    return {predicted_cross_fwhm({a.get("fs-ghz", 0.6), 1.0}, {a.get("fa-ghz", 0.6), 1.0}, j,
                                 a.get("tau", 700)),
            "s", "FWHM of exp(tau_as) * exp(tau_fa) * exp(-tau_fs) * Gaussian jitters"};
  }
  if (name == "g2c") {
    return {theoretical_conditional_g2(a.need("asas"), a.need("sas")), "1",
            "g2_C(0) = 2 g2_ASAS(0) / g2_SAS(0)"};
  }
  if (name == "cs") {
    const auto f = cs_factor({a.need("sas"), 0}, {a.need("ss"), 0}, {a.need("asas"), 0});
    return {f.value, "1", "F = g2_SAS^2 / (g2_SS g2_ASAS)"};
  }
  if (name == "rate-bw") {
    return {rate_in_bandwidth(a.need("rate"), a.need("source-bw"), a.need("target-bw")),
            "pairs/s", "r' = r target_bw / source_bw"};
  }
  if (name == "finesse") {
    return {etalon_finesse(a.need("fsr"), a.need("fwhm")), "1", "F = FSR / fwhm"};
  }
  throw Error(Errc::unknown_formula, "unknown formula '" + name + "'");
}

Json constants_json() {
  const auto& k = kConstants;
  return Json{{"c", {{"value", k.c}, {"units", "m/s"}}},
              {"kB", {{"value", k.kB}, {"units", "J/K"}}},
              {"m_rb87", {{"value", k.m_rb87}, {"units", "kg"}}},
              {"lambda_d1", {{"value", k.lambda_d1}, {"units", "m"}}},
              {"delta_hf", {{"value", k.delta_hf}, {"units", "Hz"}}},
              {"delta_nu_sas", {{"value", k.delta_nu_sas}, {"units", "Hz"}}}};
}

int cmd_calc(const Options& o, const std::string& name, const CalcArgs& args, bool constants,
             std::ostream& out) {
  if (constants) {
    out << constants_json().dump(2) << '\n';
    return exit_ok;
  }
  if (name.empty()) throw Error(Errc::bad_args, "calc needs a formula name or --constants");
  const auto v = evaluate(name, args);
  if (o.format == "csv") {
    out << "formula,value,units,expression\n"
        << name << ',' << Json(v.value).dump() << ',' << v.units << ",\"" << v.formula << "\"\n";
  } else {
    out << Json{{"formula", name}, {"value", v.value}, {"units", v.units}, {"expression", v.formula}}
               .dump(2)
        << '\n';
  }
  return exit_ok;
}

int cmd_selftest(bool mutate, const std::string& format, std::ostream& out) {
  const auto suites = run_selftest({mutate});
  bool ok = true;
  if (format == "json") {
    Json j = Json::array();
    for (const auto& s : suites) {
      j.push_back({{"suite", s.name}, {"passed", s.passed}, {"detail", s.detail}});
      ok = ok && s.passed;
    }
    out << j.dump(2) << '\n';
  } else {
    for (const auto& s : suites) {
      out << s.name << ',' << (s.passed ? "pass" : "FAIL") << ",\"" << s.detail << "\"\n";
      ok = ok && s.passed;
    }
  }
  return ok ? exit_ok : exit_data;
}

// ---------------------------------------------------------------------------
// Self-test suites.

SuiteStatus oracle_suite(bool mutate) {
  Rng rng = make_rng(20240601, 1);
  int agree = 0;
  const int trials = 20;
  for (int i = 0; i < trials; ++i) {
    const Picoseconds T = 2'000'000 + static_cast<Picoseconds>(uniform01(rng) * 2e6);
    auto draw = [&](ChannelId ch) {
      const auto n = 1 + static_cast<std::size_t>(uniform01(rng) * 2000);
      std::vector<TimeTag> t(n);
      for (auto& x : t) x = static_cast<TimeTag>(uniform01(rng) * static_cast<double>(T));
      std::sort(t.begin(), t.end());
      return TimeTagStream(ch, std::move(t), T);
    };
    const auto a = draw(channel::stokes);
    const auto b = draw(channel::anti_stokes);
    const Picoseconds w = 1 + static_cast<Picoseconds>(uniform01(rng) * 400);
    const Picoseconds range = 2000 + static_cast<Picoseconds>(uniform01(rng) * 20000);
    TimeTagStream fast_b = b;
    if (mutate) {
      std::vector<TimeTag> shifted(b.tags().begin(), b.tags().end());
      for (auto& x : shifted) x = std::min<TimeTag>(x + 1, static_cast<TimeTag>(T - 1));
      fast_b = TimeTagStream(b.channel(), std::move(shifted), T);
    }
    const auto fast = cross_histogram(a, fast_b, w, -range, range);
    const auto slow = brute_force_histogram(a, b, w, -range, range, false);
    agree += fast.counts == slow.counts;
  }
  return {"oracle", agree == trials,
          std::to_string(agree) + "/" + std::to_string(trials) + " histograms identical"};
}

SuiteStatus poisson_suite() {
  Rng rng = make_rng(20240601, 2);
  const Picoseconds T = 1'000'000'000'000;
  auto poisson = [&](ChannelId ch) {
    std::vector<TimeTag> t;
    const double gap = kPsPerSecond / 1e6;
    for (double x = gap * std_exponential(rng); x < static_cast<double>(T);
         x += gap * std_exponential(rng)) {
      t.push_back(static_cast<TimeTag>(x));
    }
    return TimeTagStream(ch, std::move(t), T);
  };
  const auto a = poisson(channel::stokes);
  const auto b = poisson(channel::anti_stokes);
  const auto g = normalize_g2(cross_histogram(a, b, 320, -16000, 16000));
  std::size_t inside = 0;
  for (std::size_t i = 0; i < g.size(); ++i) inside += std::abs(g.g2[i] - 1.0) <= 3 * g.sigma[i];
  const double frac = static_cast<double>(inside) / static_cast<double>(g.size());
  std::ostringstream d;
  d << inside << "/" << g.size() << " bins within 3 sigma of 1";
  return {"poisson-null", frac >= 0.99, d.str()};
}

/// Thermal light on both arms from one intensity, no pairs.
SuiteStatus classical_suite() {
  const auto run = simulate_and_analyze(classical_config(0.5, 7), AnalysisConfig{});
  const auto& r = run.analysis.report;
  if (!r.cs_factor) return {"classical-bound", false, "F undefined"};
  const auto F = *r.cs_factor;
  std::ostringstream d;
  d << "F = " << F.value << " +- " << F.sigma;
  return {"classical-bound", F.value <= 1.0 + 3.0 * F.sigma, d.str()};
}

SuiteStatus determinism_suite() {
  ExperimentConfig cfg;
  cfg.source = at_operating_point(cfg.source, 0, 0);
  cfg.source.pair_rate_hz = 2e7;
  cfg.source.bg_as_hz = 2e5;
  cfg.source.collection_s = 0.02;
  cfg.source.collection_as = 0.05;
  cfg.det_s = {0.6, 350, 24000, 200};
  cfg.det_as1 = cfg.det_s;
  cfg.det_as2 = cfg.det_s;
  cfg.duration_s = 0.05;
  cfg.seed = 99;
  const auto dir = fs::temp_directory_path() / "pairsim_selftest";
  fs::create_directories(dir);
  std::string hashes[2], reports[2];
  for (int k = 0; k < 2; ++k) {
    const auto set = simulate_experiment(cfg);
    const auto path = dir / ("run" + std::to_string(k) + ".ttag");
    write_ttag(set, path);
    hashes[k] = sha256_file(path);
    reports[k] = to_json(analyze(set, AnalysisConfig{}).report).dump();
  }
  fs::remove_all(dir);
  const bool ok = hashes[0] == hashes[1] && reports[0] == reports[1];
  return {"determinism", ok, "sha256 " + hashes[0].substr(0, 16) + (ok ? " reproduced" : " differs")};
}

}  // namespace

ExperimentConfig classical_config(double duration_s, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.source.bg_s_hz = 1.2e6;
  cfg.source.bg_as_hz = 4.7e6;
  cfg.source.tau_coh_ps = 2500;
  cfg.source.modulated_backgrounds = true;
  cfg.det_s = {0.6, 350, 24000, 200};
  cfg.det_as1 = cfg.det_s;
  cfg.det_as2 = cfg.det_s;
  cfg.hbt_on_s = true;
  cfg.hbt_on_as = true;
  cfg.duration_s = duration_s;
  cfg.seed = seed;
  return cfg;
}

std::vector<SuiteStatus> run_selftest(const SelftestOptions& opt) {
  std::vector<SuiteStatus> s;
  s.push_back(oracle_suite(opt.mutate_correlator));
  s.push_back(poisson_suite());
  s.push_back(classical_suite());
  s.push_back(determinism_suite());
  return s;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Photon-pair source simulation and time-tag correlation analysis", "pairsim"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  Options o;
  app.add_option("--seed", o.seed, "Master seed (overrides the config)");
  app.add_option("--config", o.config, "Configuration JSON");
  app.add_option("--out", o.out, "Output file (simulate) or directory");
  app.add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv"}));

  auto* sim = app.add_subcommand("simulate", "Simulate an acquisition into a TTAG file");
  std::optional<double> sim_duration;
  sim->add_option("--duration", sim_duration, "Acquisition length in seconds");

  auto* ana = app.add_subcommand("analyze", "Correlate a TTAG file");
  std::string input;
  ana->add_option("input", input, "TTAG file")->required();

  auto* swp = app.add_subcommand("sweep", "Simulate and analyze across power or OD");
  std::string axis;
  std::vector<double> values;
  std::optional<double> sweep_duration;
  swp->add_option("--axis", axis, "power or od")->required();
  swp->add_option("--values", values, "Axis values")->required()->delimiter(',');
  swp->add_option("--duration", sweep_duration, "Seconds per point");

  auto* calc = app.add_subcommand("calc", "Closed-form physics values");
  std::string formula;
  bool constants = false;
  CalcArgs cargs;
  calc->add_option("formula", formula,
                   "phase-mismatch, overlap, doppler, doppler-temperature, spinwave, filter-tau, "
                   "cross-fwhm, g2c, cs, rate-bw, finesse");
  calc->add_flag("--constants", constants, "Print the physical constants");
  for (const char* key : {"dnu", "angle-deg", "diameter", "threshold", "t", "sigma", "fwhm-ghz",
                          "fs-ghz", "fa-ghz", "tau", "asas", "sas", "ss", "rate", "source-bw",
                          "target-bw", "fsr", "fwhm"}) {
    calc->add_option_function<double>(
        std::string("--") + key, [&cargs, key](const double& v) { cargs.num[key] = v; });
  }
  calc->add_option("--jitter", cargs.jitter, "Detector jitter FWHMs in ps")->delimiter(',');
  calc->add_option("--convention", cargs.convention, "amplitude or intensity");

  auto* self = app.add_subcommand("selftest", "Run the built-in consistency suites");
  bool mutate = false;
  self->add_flag("--mutate-correlator", mutate)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*sim) return cmd_simulate(o, sim_duration, out);
    if (*ana) return cmd_analyze(o, input, out);
    if (*swp) return cmd_sweep(o, axis, values, sweep_duration, out);
    if (*calc) return cmd_calc(o, formula, cargs, constants, out);
    if (*self) return cmd_selftest(mutate, o.format, out);
  } catch (const Error& e) {
    err << "error: " << e.what();
    if (e.byte_offset()) err << " (byte " << *e.byte_offset() << ")";
    err << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return exit_internal;
  }
  return exit_usage;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"pairsim"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace pairsim
