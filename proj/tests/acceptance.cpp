// End-to-end acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--default-seconds S] [--only N]
//
// Criteria 4 and 5 stream a 600 s simulation of the default source straight into the
// analyzer, which takes tens of minutes on one core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "pairsim/analysis.hpp"
#include "pairsim/cli.hpp"
#include "pairsim/config.hpp"
#include "pairsim/correlator.hpp"
#include "pairsim/oracle.hpp"
#include "pairsim/physics.hpp"
#include "pairsim/simulator.hpp"
#include "pairsim/sweep.hpp"
#include "pairsim/ttag_io.hpp"

using namespace pairsim;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Line {
  std::ostringstream detail;
  bool ok = true;

  void check(bool cond, const std::string& what) {
    if (!cond) ok = false;
    detail << (cond ? "" : "!") << what << "; ";
  }
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

fs::path source_dir() { return fs::path(PAIRSIM_SOURCE_DIR); }

TimeTagStream poisson(ChannelId ch, double rate_hz, Picoseconds T, Rng& rng) {
  std::vector<TimeTag> t;
  t.reserve(static_cast<std::size_t>(rate_hz * static_cast<double>(T) / kPsPerSecond * 1.01));
  const double gap = kPsPerSecond / rate_hz;
  for (double x = gap * std_exponential(rng); x < static_cast<double>(T);
       x += gap * std_exponential(rng)) {
    t.push_back(static_cast<TimeTag>(x));
  }
  return TimeTagStream(ch, std::move(t), T);
}

// ---------------------------------------------------------------------------

void criterion1(Line& L) {
  const auto t0 = Clock::now();
  Rng rng = make_rng(1, 1001);
  int equal = 0;
  const int trials = 200;
  for (int i = 0; i < trials; ++i) {
    const auto n_a = 1 + static_cast<std::size_t>(uniform01(rng) * 9999);
    const auto n_b = 1 + static_cast<std::size_t>(uniform01(rng) * 9999);
    const Picoseconds T = 1000 + static_cast<Picoseconds>(uniform01(rng) * 2e7);
    const bool coarse_clock = uniform01(rng) < 0.25;  // many equal timestamps
    auto draw = [&](ChannelId ch, std::size_t n) {
      std::vector<TimeTag> t(n);
      for (auto& x : t) {
        x = static_cast<TimeTag>(uniform01(rng) * static_cast<double>(T));
        if (coarse_clock) x -= x % 100;
      }
      std::sort(t.begin(), t.end());
      return TimeTagStream(ch, std::move(t), T);
    };
    const auto a = draw(channel::stokes, n_a);
    const bool same = uniform01(rng) < 0.1;
    const auto b = same ? a : draw(channel::anti_stokes, n_b);
    const Picoseconds w = 1 + static_cast<Picoseconds>(uniform01(rng) * 1000);
    const Picoseconds lo = -static_cast<Picoseconds>(uniform01(rng) * 20000);
    const Picoseconds hi = lo + 1 + static_cast<Picoseconds>(uniform01(rng) * 40000);
    const auto fast = cross_histogram(a, same ? a : b, w, lo, hi);
    const auto slow = brute_force_histogram(a, b, w, lo, hi, same);
    equal += fast.counts == slow.counts && fast.total() == slow.total();
  }
  const double secs = since(t0);
  L.check(equal == trials, std::to_string(equal) + "/200 bin-exact");
  L.check(secs < 30.0, "runtime " + fmt(secs, 3) + " s < 30 s");
}

void criterion2(Line& L) {
  const Picoseconds T = 100'000'000'000'000;  // 100 s
  std::size_t bins = 0, inside = 0, cbins = 0, cinside = 0, pooled_ok = 0;
  double worst = 1.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng = make_rng(seed, 2002);
    const auto s = poisson(channel::stokes, 1e5, T, rng);
    const auto a1 = poisson(channel::anti_stokes, 1e5, T, rng);
    const auto a2 = poisson(channel::anti_stokes_2, 1e5, T, rng);
    const auto g = normalize_g2(cross_histogram(s, a1, kDefaultBinPs, -kDefaultRangePs,
                                                kDefaultRangePs));
    std::size_t in = 0;
    for (std::size_t i = 0; i < g.size(); ++i) in += std::abs(g.g2[i] - 1.0) <= 3 * g.sigma[i];
    bins += g.size();
    inside += in;
    worst = std::min(worst, static_cast<double>(in) / static_cast<double>(g.size()));

    const auto c = conditional_g2(s, a1, a2, kDefaultBinPs, std::nullopt,
                                  DelayGrid::symmetric(kDefaultBinPs, kDefaultRangePs));
    double n3 = 0, n2 = 0;
    for (std::size_t i = 0; i < c.curve.size(); ++i) {
      cinside += std::abs(c.curve.g2[i] - 1.0) <= 3 * c.curve.sigma[i];
      n3 += static_cast<double>(c.n_triple[i]);
      n2 += static_cast<double>(c.n_s_as2[i]);
    }
    cbins += c.curve.size();
    // All delays pooled: sum of triples against its expectation.
    const double expect = static_cast<double>(c.n_herald) * n2 / static_cast<double>(c.n_s);
    pooled_ok += std::abs(n3 - expect) <= 3 * std::sqrt(expect);
  }
  const double frac = static_cast<double>(inside) / static_cast<double>(bins);
  const double cfrac = static_cast<double>(cinside) / static_cast<double>(cbins);
  L.check(frac >= 0.99, "g2 bins within 3 sigma " + fmt(100 * frac) + " % (worst seed " +
                            fmt(100 * worst) + " %) >= 99 %");
  L.check(cfrac >= 0.99, "g2_C bins within 3 sigma " + fmt(100 * cfrac) + " % >= 99 %");
  L.check(pooled_ok == 20, "pooled g2_C = 1 within 3 sigma in " + std::to_string(pooled_ok) + "/20");
}

void criterion3(Line& L) {
  int ok = 0;
  double max_z = -1e9;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto run = simulate_and_analyze(classical_config(5.0, seed), AnalysisConfig{});
    const auto& r = run.analysis.report;
    if (!r.cs_factor) continue;
    const auto F = *r.cs_factor;
    ok += F.value <= 1.0 + 3.0 * F.sigma;
    max_z = std::max(max_z, (F.value - 1.0) / F.sigma);
  }
  L.check(ok == 20, "F <= 1 + 3 sigma_F in " + std::to_string(ok) +
                        "/20 runs (largest (F-1)/sigma " + fmt(max_z, 3) + ")");
}

void criteria4and5(Line& L4, Line& L5, double seconds) {
  auto rc = load_config(source_dir() / "configs" / "paper_default.json");
  rc.experiment.duration_s = seconds;
  const auto t0 = Clock::now();
  const auto run = simulate_and_analyze(rc.experiment, rc.analysis);
  const auto& r = run.analysis.report;
  L4.detail << "[" << seconds << " s simulated in " << fmt(since(t0), 4) << " s] ";

  L4.check(std::abs(r.rate_s.value / 4.8e5 - 1) <= 0.05, "N_S " + fmt(r.rate_s.value) + "/s");
  L4.check(std::abs(r.rate_as.value / 1.89e6 - 1) <= 0.05, "N_AS " + fmt(r.rate_as.value) + "/s");
  L4.check(std::abs(r.pair_rate.value / 7224 - 1) <= 0.10,
           "pair rate " + fmt(r.pair_rate.value) + "/s");
  const double eta = r.heralding_eta ? r.heralding_eta->value : 0.0;
  L4.check(std::abs(eta - 0.015) <= 0.002, "eta " + fmt(100 * eta) + " %");
  L4.check(within(r.g2_sas_peak.value, 6, 8), "g2_SAS peak " + fmt(r.g2_sas_peak.value));
  L4.check(within(r.g2_ss_0.value, 1.4, 1.9), "g2_SS(0) " + fmt(r.g2_ss_0.value));
  L4.check(within(r.g2_asas_0.value, 1.4, 1.9), "g2_ASAS(0) " + fmt(r.g2_asas_0.value));
  const double F = r.cs_factor ? r.cs_factor->value : 0.0;
  L4.check(within(F, 12, 22), "F " + fmt(F));
  const double fwhm = r.fwhm_ps.value_or(0.0);
  L4.check(std::abs(fwhm - 1300) <= 300, "FWHM " + fmt(fwhm / 1000) + " ns");

  const double gc = r.g2c_0 ? r.g2c_0->value : 1e9;
  const double theory = r.g2c_theory.value_or(-1e9);
  L5.check(gc < 0.6, "g2_C(0) " + fmt(gc) + " +- " + fmt(r.g2c_0 ? r.g2c_0->sigma : 0, 2) +
                         " < 0.6");
  L5.check(std::abs(gc - theory) <= 0.15, "2 g2_ASAS/g2_SAS " + fmt(theory));
  const double dip = r.g2c_dip_fwhm_ps.value_or(0.0);
  L5.check(fwhm > 0 && dip >= 1.5 * fwhm, "triggered FWHM " + fmt(dip / 1000) + " ns = " +
                                              fmt(fwhm > 0 ? dip / fwhm : 0, 3) + " x two-fold");
}

void criterion6(Line& L) {
  auto rc = load_config(source_dir() / "configs" / "paper_default.json");
  rc.experiment.duration_s = 10.0;
  const std::vector<double> powers{10, 20, 30, 40};
  const std::vector<double> ods{0.5, 0.9, 1.3};
  const auto p = run_sweep(rc.experiment, rc.analysis, SweepAxis::power, powers);
  const auto o = run_sweep(rc.experiment, rc.analysis, SweepAxis::od, ods);
  const double sp = p.slope_rate_s.value_or(0.0);
  const double so = o.slope_pair_rate.value_or(0.0);
  L.check(std::abs(sp - 1.0) <= 0.1, "power slope of N_S " + fmt(sp));
  L.check(std::abs(so - 2.0) <= 0.2, "OD slope of pair rate " + fmt(so));
}

void criterion7(Line& L) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double d = phase_mismatch_length(13.6e9) * 1e3;
  L.check(std::abs(d - 11.03) <= 0.01, "phase mismatch " + fmt(d, 6) + " mm");
  const double g = theoretical_conditional_g2(1.649, 6.984);
  L.check(std::abs(g - 0.472) <= 0.001, "g2_C theory " + fmt(g, 6));
  const double F = cs_factor({6.984, 0}, {1.73, 0}, {1.649, 0}).value;
  L.check(std::abs(F - 17.10) <= 0.05, "F " + fmt(F, 6));
  const double source_bw = 769e6;
  const double r = rate_in_bandwidth(7224, source_bw, 1e6);
  L.check(std::abs(r - 9.4) <= 0.05, "rate in 1 MHz " + fmt(r, 4) + " pairs/s");
  const double T = doppler_temperature(230e6);
  const double sd = doppler_sigma(T);
  L.check(std::abs(sd / 230e6 - 1) <= 0.05,
          "sigma_D " + fmt(sd / 1e6, 5) + " MHz at " + fmt(T, 5) + " K");
  const double ratio = spinwave_coherence_time(90 * deg, 300) / spinwave_coherence_time(2 * deg, 300);
  const double expect = std::sin(1 * deg) / std::sin(45 * deg);
  L.check(std::abs(ratio / expect - 1) <= 0.01, "t(90)/t(2) " + fmt(ratio, 5));
}

void criterion8(Line& L) {
  const FilterParams f{0.6, 0.68};
  const double j[] = {350, 350};
  const double tau = 700;  // tuned once
  const double w = predicted_cross_fwhm(f, f, j, tau) * 1e9;
  L.check(std::abs(w - 1.3) <= 0.2, "FWHM " + fmt(w, 4) + " ns");
  bool mono = true;
  for (double s : {1.05, 1.25, 1.5, 2.0, 3.0}) {
    const FilterParams narrow{0.6 / s, 0.68};
    const double ja[] = {350 * s, 350};
    const double jb[] = {350, 350 * s};
    for (double v : {predicted_cross_fwhm(narrow, f, j, tau), predicted_cross_fwhm(f, narrow, j, tau),
                     predicted_cross_fwhm(f, f, ja, tau), predicted_cross_fwhm(f, f, jb, tau),
                     predicted_cross_fwhm(f, f, j, tau * s)}) {
      mono = mono && v * 1e9 >= w;
    }
  }
  L.check(mono, "non-decreasing in each input");
}

void criterion9(Line& L) {
  auto rc = load_config(source_dir() / "configs" / "paper_default.json");
  rc.experiment.duration_s = 0.5;
  const auto dir = fs::temp_directory_path() / "pairsim_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string hash[2], report[2];
  for (int k = 0; k < 2; ++k) {
    const auto set = simulate_experiment(rc.experiment);
    const auto path = dir / ("run" + std::to_string(k) + ".ttag");
    write_ttag(set, path);
    hash[k] = sha256_file(path);
    report[k] = to_json(analyze(read_ttag(path), rc.analysis).report).dump();
  }
  fs::remove_all(dir);
  L.check(hash[0] == hash[1], "TTAG sha256 identical");
  L.check(report[0] == report[1], "report bytes identical");

  Rng rng = make_rng(9, 9009);
  const Picoseconds T = 10'000'000'000'000;  // 10 s at 1e6/s per channel
  const auto a = poisson(channel::stokes, 1e6, T, rng);
  const auto b = poisson(channel::anti_stokes, 1e6, T, rng);
  const auto t0 = Clock::now();
  const auto h = cross_histogram(a, b, kDefaultBinPs, -kDefaultRangePs, kDefaultRangePs);
  const double secs = since(t0);
  L.check(secs < 10.0, "correlated " + fmt(static_cast<double>(a.size() + b.size()), 3) +
                           " tags over +-16 ns in " + fmt(secs, 3) + " s < 10 s");
  (void)h;
}

}  // namespace

int main(int argc, char** argv) {
  double default_seconds = 600.0;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--default-seconds") && i + 1 < argc) default_seconds = std::atof(argv[++i]);
    else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) only = std::atoi(argv[++i]);
  }
  std::vector<Line> lines(10);
  std::vector<bool> ran(10, false);
  auto run = [&](int n, const std::function<void()>& fn) {
    if (only && only != n && !(only == 5 && n == 4)) return;
    const auto t0 = Clock::now();
    try {
      fn();
    } catch (const std::exception& e) {
      lines[n].check(false, std::string("exception: ") + e.what());
    }
    ran[n] = true;
    std::fprintf(stderr, "criterion %d done in %.1f s\n", n, since(t0));
  };
  run(1, [&] { criterion1(lines[1]); });
  run(2, [&] { criterion2(lines[2]); });
  run(3, [&] { criterion3(lines[3]); });
  run(4, [&] {
    criteria4and5(lines[4], lines[5], default_seconds);
    ran[5] = true;
  });
  run(6, [&] { criterion6(lines[6]); });
  run(7, [&] { criterion7(lines[7]); });
  run(8, [&] { criterion8(lines[8]); });
  run(9, [&] { criterion9(lines[9]); });

  bool all = true;
  for (int n = 1; n <= 9; ++n) {
    if (!ran[n]) continue;
    std::printf("criterion %d: %s  %s\n", n, lines[n].ok ? "PASS" : "FAIL",
                lines[n].detail.str().c_str());
    all = all && lines[n].ok;
  }
  std::fflush(stdout);
  return all ? 0 : 1;
}
