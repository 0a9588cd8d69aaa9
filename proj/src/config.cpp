#include "pairsim/config.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <set>

#include "pairsim/error.hpp"

namespace pairsim {
namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw Error(Errc::schema_violation, (path.empty() ? "/" : path) + ": " + what);
}

/// Reads the keys of one JSON object and rejects any it did not ask for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) schema_error(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  void number(const std::string& key, double& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number()) schema_error(at(key), "expected a number");
      out = v->get<double>();
    }
  }

  void integer(const std::string& key, std::int64_t& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number_integer()) schema_error(at(key), "expected an integer");
      out = v->get<std::int64_t>();
    }
  }

  void unsigned_integer(const std::string& key, std::uint64_t& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number_unsigned()) schema_error(at(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const Json* v = take(key)) {
      if (!v->is_boolean()) schema_error(at(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  const Json* object(const std::string& key) {
    const Json* v = take(key);
    if (v && !v->is_object()) schema_error(at(key), "expected an object");
    return v;
  }

  const Json* any(const std::string& key) { return take(key); }

  std::string at(const std::string& key) const { return path_ + "/" + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) schema_error(at(key), "unknown key");
    }
  }

 private:
  const Json* take(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_filter(ObjectReader& parent, const std::string& key, FilterParams& f) {
  if (const Json* j = parent.object(key)) {
    ObjectReader r(*j, parent.at(key));
    r.number("fwhm_ghz", f.fwhm_ghz);
    r.number("peak_transmission", f.peak_transmission);
    r.finish();
  }
}

void read_detector(ObjectReader& parent, const std::string& key, DetectorParams& d) {
  if (const Json* j = parent.object(key)) {
    ObjectReader r(*j, parent.at(key));
    r.number("efficiency", d.efficiency);
    r.number("jitter_fwhm_ps", d.jitter_fwhm_ps);
    r.number("dead_time_ps", d.dead_time_ps);
    r.number("dark_rate_hz", d.dark_rate_hz);
    r.finish();
  }
}

void read_source(ObjectReader& parent, SourceParams& s) {
  const Json* j = parent.object("source");
  if (!j) return;
  ObjectReader r(*j, parent.at("source"));
  r.number("power_mw", s.power_mw);
  r.number("od", s.od);
  r.number("c_s", s.c_s);
  r.number("c_pair", s.c_pair);
  r.number("c_as", s.c_as);
  const auto derived = at_operating_point(s, s.power_mw, s.od);
  s.pair_rate_hz = derived.pair_rate_hz;
  s.bg_s_hz = derived.bg_s_hz;
  s.bg_as_hz = derived.bg_as_hz;
  r.number("pair_rate_hz", s.pair_rate_hz);
  r.number("bg_s_hz", s.bg_s_hz);
  r.number("bg_as_hz", s.bg_as_hz);
  r.number("tau_as_ps", s.tau_as_ps);
  r.number("tau_coh_ps", s.tau_coh_ps);
  r.number("collection_s", s.collection_s);
  r.number("collection_as", s.collection_as);
  r.boolean("modulated_backgrounds", s.modulated_backgrounds);
  r.finish();
}

void read_analysis(ObjectReader& parent, AnalysisConfig& a) {
  const Json* j = parent.object("analysis");
  if (!j) return;
  ObjectReader r(*j, parent.at("analysis"));
  r.integer("bin_ps", a.bin_ps);
  r.integer("range_ps", a.range_ps);
  r.integer("herald_window_ps", a.herald_window_ps);
  if (const Json* t = r.any("tau_star_ps"); t && !t->is_null()) {
    if (!t->is_number_integer()) schema_error(r.at("tau_star_ps"), "expected an integer or null");
    a.tau_star_ps = t->get<std::int64_t>();
  }
  r.unsigned_integer("split_seed", a.split_seed);
  r.finish();
  if (a.bin_ps <= 0) schema_error(r.at("bin_ps"), "must be > 0");
  if (a.range_ps <= 0) schema_error(r.at("range_ps"), "must be > 0");
  if (a.herald_window_ps <= 0 || (a.herald_window_ps / a.bin_ps) % 2 == 0 ||
      a.herald_window_ps % a.bin_ps != 0) {
    schema_error(r.at("herald_window_ps"), "must be an odd multiple of bin_ps");
  }
}

Json measured(const Measured& m) { return Json{{"value", m.value}, {"sigma", m.sigma}}; }

template <class T>
Json optional_json(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_same_v<T, Measured>) {
    return measured(*v);
  } else {
    return *v;
  }
}

}  // namespace

RunConfig parse_config(const Json& doc) {
  ObjectReader r(doc, "");
  if (!r.has("schema_version")) schema_error("/schema_version", "missing");
  std::int64_t version = 0;
  r.integer("schema_version", version);
  if (version != kSchemaVersion) {
    schema_error("/schema_version", "unsupported version " + std::to_string(version));
  }
  RunConfig cfg;
  auto& e = cfg.experiment;
  read_source(r, e.source);
  read_filter(r, "filter_s", e.filter_s);
  read_filter(r, "filter_as", e.filter_as);
  read_detector(r, "det_s", e.det_s);
  read_detector(r, "det_as1", e.det_as1);
  read_detector(r, "det_as2", e.det_as2);
  r.number("duration_s", e.duration_s);
  r.unsigned_integer("seed", e.seed);
  r.boolean("hbt_on_as", e.hbt_on_as);
  r.boolean("hbt_on_s", e.hbt_on_s);
  r.number("intensity_cap", e.intensity_cap);
  read_analysis(r, cfg.analysis);
  if (const Json* m = r.object("metadata")) cfg.metadata = *m;
  r.finish();
  try {
    validate(e);
  } catch (const Error& err) {
    if (err.code() != Errc::invariant_violation) throw;
    throw Error(Errc::schema_violation, err.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::schema_violation, path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

Json to_json(const ExperimentConfig& cfg) {
  const auto& s = cfg.source;
  auto filter = [](const FilterParams& f) {
    return Json{{"fwhm_ghz", f.fwhm_ghz}, {"peak_transmission", f.peak_transmission}};
  };
  auto detector = [](const DetectorParams& d) {
    return Json{{"efficiency", d.efficiency},
                {"jitter_fwhm_ps", d.jitter_fwhm_ps},
                {"dead_time_ps", d.dead_time_ps},
                {"dark_rate_hz", d.dark_rate_hz}};
  };
  return Json{{"schema_version", kSchemaVersion},
              {"source",
               {{"power_mw", s.power_mw},
                {"od", s.od},
                {"c_s", s.c_s},
                {"c_pair", s.c_pair},
                {"c_as", s.c_as},
                {"pair_rate_hz", s.pair_rate_hz},
                {"bg_s_hz", s.bg_s_hz},
                {"bg_as_hz", s.bg_as_hz},
                {"tau_as_ps", s.tau_as_ps},
                {"tau_coh_ps", s.tau_coh_ps},
                {"collection_s", s.collection_s},
                {"collection_as", s.collection_as},
                {"modulated_backgrounds", s.modulated_backgrounds}}},
              {"filter_s", filter(cfg.filter_s)},
              {"filter_as", filter(cfg.filter_as)},
              {"det_s", detector(cfg.det_s)},
              {"det_as1", detector(cfg.det_as1)},
              {"det_as2", detector(cfg.det_as2)},
              {"duration_s", cfg.duration_s},
              {"seed", cfg.seed},
              {"hbt_on_as", cfg.hbt_on_as},
              {"hbt_on_s", cfg.hbt_on_s},
              {"intensity_cap", cfg.intensity_cap}};
}

Json to_json(const AnalysisConfig& a) {
  Json tau = a.tau_star_ps ? Json(*a.tau_star_ps) : Json(nullptr);
  return Json{{"bin_ps", a.bin_ps},
              {"range_ps", a.range_ps},
              {"herald_window_ps", a.herald_window_ps},
              {"tau_star_ps", tau},
              {"split_seed", a.split_seed}};
}

Json to_json(const RunConfig& cfg) {
  Json j = to_json(cfg.experiment);
  j["analysis"] = to_json(cfg.analysis);
  j["metadata"] = cfg.metadata;
  return j;
}

Json to_json(const MetricsReport& r) {
  return Json{{"schema_version", kSchemaVersion},
              {"duration_s", r.duration_s},
              {"n_s", r.n_s},
              {"n_as", r.n_as},
              {"rate_s", measured(r.rate_s)},
              {"rate_as", measured(r.rate_as)},
              {"g2_sas_peak", measured(r.g2_sas_peak)},
              {"tau_peak_ps", r.tau_peak_ps},
              {"fwhm_ps", optional_json(r.fwhm_ps)},
              {"g2_ss_0", measured(r.g2_ss_0)},
              {"g2_asas_0", measured(r.g2_asas_0)},
              {"method_ss", r.method_ss},
              {"method_asas", r.method_asas},
              {"cs_factor", optional_json(r.cs_factor)},
              {"pair_window_ps", r.pair_window_ps},
              {"pair_count", r.pair_count},
              {"pair_rate", measured(r.pair_rate)},
              {"accidental_rate", measured(r.accidental_rate)},
              {"net_pair_rate", measured(r.net_pair_rate)},
              {"heralding_eta", optional_json(r.heralding_eta)},
              {"g2c_0", optional_json(r.g2c_0)},
              {"g2c_tau_star_ps", optional_json(r.g2c_tau_star_ps)},
              {"g2c_theory", optional_json(r.g2c_theory)},
              {"g2c_dip_fwhm_ps", optional_json(r.g2c_dip_fwhm_ps)},
              {"n_herald", r.n_herald}};
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string canon = to_json(cfg).dump();
  return sha256_hex({reinterpret_cast<const unsigned char*>(canon.data()), canon.size()});
}

namespace {

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error(Errc::io_failure, "SHA-256 unavailable");
    }
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
    std::string out;
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
      std::snprintf(buf, sizeof buf, "%02x", md[i]);
      out += buf;
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx_;
};

}  // namespace

std::string sha256_hex(std::span<const unsigned char> bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

}  // namespace pairsim
