#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "pairsim/cli.hpp"
#include "pairsim/config.hpp"
#include "pairsim/ttag_io.hpp"

using namespace pairsim;
namespace fs = std::filesystem;

namespace {

const fs::path kDefault = fs::path(PAIRSIM_SOURCE_DIR) / "configs" / "paper_default.json";

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

double calc_value(const std::vector<std::string>& args) {
  std::vector<std::string> full{"calc"};
  full.insert(full.end(), args.begin(), args.end());
  const auto r = cli(full);
  REQUIRE(r.code == 0);
  return Json::parse(r.out)["value"].get<double>();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "pairsim_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_json(const fs::path& path, const Json& j) {
  std::ofstream f(path);
  f << j.dump(2);
  return path;
}

Json default_doc() {
  std::ifstream f(kDefault);
  return Json::parse(f);
}

}  // namespace

TEST_CASE("calc formulas") {
  CHECK(calc_value({"phase-mismatch", "--dnu", "13.6e9"}) == doctest::Approx(0.011022).epsilon(1e-4));
  CHECK(calc_value({"g2c", "--asas", "1.649", "--sas", "6.984"}) ==
        doctest::Approx(2 * 1.649 / 6.984));
  CHECK(calc_value({"cs", "--sas", "6.984", "--ss", "1.73", "--asas", "1.649"}) ==
        doctest::Approx(6.984 * 6.984 / (1.73 * 1.649)));
  CHECK(calc_value({"rate-bw", "--rate", "7224", "--source-bw", "769e6", "--target-bw", "1e6"}) ==
        doctest::Approx(7224.0 / 769.0));
  CHECK(calc_value({"finesse", "--fsr", "10", "--fwhm", "2"}) == doctest::Approx(5.0));
  const double t = calc_value({"doppler-temperature", "--sigma", "230e6"});
  CHECK(calc_value({"doppler", "--t", std::to_string(t)}) == doctest::Approx(230e6).epsilon(1e-5));
  const double w = calc_value({"cross-fwhm", "--jitter", "350,350"});
  CHECK(w > 1.0e-9);
  CHECK(w < 1.6e-9);

  const auto r = cli({"calc", "g2c", "--asas", "1", "--sas", "4"});
  const auto j = Json::parse(r.out);
  CHECK(j["formula"] == "g2c");
  CHECK(j["units"] == "1");
  CHECK(j.contains("expression"));
}

TEST_CASE("calc errors map to usage exit codes") {
  CHECK(cli({"calc", "warp-drive"}).code == exit_usage);
  CHECK(cli({"calc", "g2c", "--asas", "1"}).code == exit_usage);
  CHECK(cli({"calc", "g2c", "--asas", "1", "--sas", "0"}).code == exit_usage);
  CHECK(cli({"calc", "rate-bw", "--rate", "1", "--source-bw", "1e6", "--target-bw", "2e6"}).code ==
        exit_usage);
  CHECK(cli({"calc", "overlap", "--angle-deg", "2", "--diameter", "3e-4", "--threshold", "1.5"})
            .code == exit_usage);
  CHECK(cli({"frobnicate"}).code == exit_usage);
  CHECK(cli({}).code == exit_usage);
  CHECK(cli({"calc", "--constants"}).code == exit_ok);
}

TEST_CASE("exit code table") {
  CHECK(exit_code_for(Errc::schema_violation) == exit_usage);
  CHECK(exit_code_for(Errc::unknown_formula) == exit_usage);
  CHECK(exit_code_for(Errc::corrupt_header) == exit_data);
  CHECK(exit_code_for(Errc::truncated_file) == exit_data);
  CHECK(exit_code_for(Errc::empty_stream) == exit_data);
  CHECK(exit_code_for(Errc::invariant_violation) == exit_internal);
}

TEST_CASE("simulate with zero rates writes a header-only file") {
  const auto dir = scratch("zero");
  Json doc = default_doc();
  doc["source"] = {{"power_mw", 0}, {"od", 0}, {"modulated_backgrounds", false}};
  for (const char* d : {"det_s", "det_as1", "det_as2"}) doc[d]["dark_rate_hz"] = 0;
  const auto cfg = write_json(dir / "zero.json", doc);
  const auto out = dir / "zero.ttag";
  const auto r = cli({"--config", cfg.string(), "--out", out.string(), "simulate", "--duration",
                      "0.01"});
  REQUIRE(r.code == 0);
  CHECK(fs::file_size(out) == kTtagHeaderSize);
  const auto set = read_ttag(out);
  CHECK(set.total_tags() == 0);
  CHECK(set.has(channel::stokes_2));

  // Nothing to correlate.
  const auto a = cli({"--out", (dir / "ana").string(), "analyze", out.string()});
  CHECK(a.code == exit_data);
}

TEST_CASE("simulate is reproducible and its manifest describes the output") {
  const auto dir = scratch("repro");
  std::string hashes[2];
  for (int k = 0; k < 2; ++k) {
    const auto out = dir / ("run" + std::to_string(k) + ".ttag");
    const auto r = cli({"--config", kDefault.string(), "--seed", "5", "--out", out.string(),
                        "simulate", "--duration", "0.02"});
    REQUIRE(r.code == 0);
    hashes[k] = sha256_file(out);
    std::ifstream f(out.string() + ".manifest.json");
    const auto m = Json::parse(f);
    CHECK(m["command"] == "simulate");
    CHECK(m["seed"] == 5);
    REQUIRE(m["outputs"].size() == 1);
    CHECK(m["outputs"][0]["size"].get<std::uint64_t>() == fs::file_size(out));
    CHECK(m["outputs"][0]["sha256"] == hashes[k]);
    CHECK(m["counts"]["records"].get<std::uint64_t>() ==
          (fs::file_size(out) - kTtagHeaderSize) / kTtagRecordSize);
  }
  CHECK(hashes[0] == hashes[1]);

  const auto other = dir / "other.ttag";
  REQUIRE(cli({"--config", kDefault.string(), "--seed", "6", "--out", other.string(), "simulate",
               "--duration", "0.02"})
              .code == 0);
  CHECK(sha256_file(other) != hashes[0]);
}

TEST_CASE("analyze writes the report and curves") {
  const auto dir = scratch("analyze");
  const auto ttag = dir / "run.ttag";
  REQUIRE(cli({"--config", kDefault.string(), "--out", ttag.string(), "simulate", "--duration",
               "0.05"})
              .code == 0);
  std::string reports[2];
  for (int k = 0; k < 2; ++k) {
    const auto out = dir / ("ana" + std::to_string(k));
    const auto r = cli({"--config", kDefault.string(), "--out", out.string(), "analyze",
                        ttag.string()});
    REQUIRE(r.code == 0);
    for (const char* f : {"report.json", "g2_sas.csv", "g2_ss.csv", "g2_asas.csv", "g2c.csv",
                          "hist_sas.csv", "analyze.manifest.json"}) {
      CHECK(fs::exists(out / f));
    }
    std::ifstream f(out / "report.json");
    reports[k].assign(std::istreambuf_iterator<char>(f), {});
    std::ifstream csv(out / "g2_sas.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "tau_ps,g2,sigma");
  }
  CHECK(reports[0] == reports[1]);
  const auto j = Json::parse(reports[0]);
  CHECK(j["g2_sas_peak"]["value"].get<double>() > 2.0);

  const auto csv = cli({"--format", "csv", "--out", (dir / "ana_csv").string(), "analyze",
                        ttag.string()});
  CHECK(csv.code == 0);
  CHECK(csv.out.rfind("key,value,sigma\n", 0) == 0);
}

TEST_CASE("analyze rejects bad input files") {
  const auto dir = scratch("bad");
  CHECK(cli({"analyze", (dir / "missing.ttag").string()}).code == exit_data);
  {
    std::ofstream f(dir / "junk.ttag", std::ios::binary);
    f << "not a time tag file at all, definitely not";
  }
  CHECK(cli({"analyze", (dir / "junk.ttag").string()}).code == exit_data);
  Json doc = default_doc();
  doc["analysis"]["bin_ps"] = 0;
  const auto cfg = write_json(dir / "bad.json", doc);
  CHECK(cli({"--config", cfg.string(), "analyze", (dir / "junk.ttag").string()}).code ==
        exit_usage);
}

TEST_CASE("bad arguments") {
  CHECK(cli({"simulate"}).code == exit_usage);
  CHECK(cli({"--config", kDefault.string(), "simulate", "--duration", "-1"}).code == exit_usage);
  CHECK(cli({"--format", "xml", "calc", "--constants"}).code == exit_usage);
  CHECK(cli({"--config", kDefault.string(), "sweep", "--axis", "temperature", "--values", "1"})
            .code == exit_usage);
}

TEST_CASE("single point sweep") {
  const auto dir = scratch("sweep");
  const auto r = cli({"--config", kDefault.string(), "--out", dir.string(), "--format", "csv",
                      "sweep", "--axis", "od", "--values", "1.3", "--duration", "0.05"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("od,seed,rate_s,rate_as,pair_rate,pair_rate_total,g2_sas_peak\n", 0) == 0);
  CHECK(r.out.find("# slope_pair_rate=nan") != std::string::npos);
  CHECK(fs::exists(dir / "point_0.json"));
  CHECK(fs::exists(dir / "point_0.json.manifest.json"));
  CHECK(fs::exists(dir / "sweep.csv.manifest.json"));
}

TEST_CASE("selftest passes and catches a corrupted correlator") {
  const auto ok = cli({"selftest"});
  CHECK(ok.code == exit_ok);
  const auto bad = cli({"--format", "csv", "selftest", "--mutate-correlator"});
  CHECK(bad.code == exit_data);
  CHECK(bad.out.find("oracle,FAIL") != std::string::npos);
}
