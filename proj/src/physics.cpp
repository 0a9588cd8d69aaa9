#include "pairsim/physics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "pairsim/error.hpp"

namespace pairsim {
namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw Error(Errc::nonpositive_input, std::string(what) + " must be positive");
}

// In-place convolution with the discrete exponential kernel (1 - a) a^k,
// running forward (delays) or backward (advances).
void exponential_smear(std::vector<double>& y, double tau, double step, bool forward) {
  if (tau <= 0.0) return;
  const double a = std::exp(-step / tau);
  double acc = 0.0;
  if (forward) {
    for (double& v : y) v = acc = a * acc + (1.0 - a) * v;
  } else {
    for (auto it = y.rbegin(); it != y.rend(); ++it) *it = acc = a * acc + (1.0 - a) * *it;
  }
}

void gaussian_smear(std::vector<double>& y, double sigma, double step) {
  if (sigma <= 0.0) return;
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(8.0 * sigma / step));
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  double norm = 0.0;
  for (std::ptrdiff_t k = -half; k <= half; ++k) {
    const double x = static_cast<double>(k) * step / sigma;
    norm += kernel[static_cast<std::size_t>(k + half)] = std::exp(-0.5 * x * x);
  }
  for (double& k : kernel) k /= norm;
  const auto n = static_cast<std::ptrdiff_t>(y.size());
  std::vector<double> out(y.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (y[static_cast<std::size_t>(i)] == 0.0) continue;
    const double v = y[static_cast<std::size_t>(i)];
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      out[static_cast<std::size_t>(j)] += v * kernel[static_cast<std::size_t>(j - i + half)];
    }
  }
  y.swap(out);
}

double fwhm_of(const std::vector<double>& y, double step) {
  const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double half = y[peak] / 2.0;
  std::size_t l = peak;
  while (l > 0 && y[l - 1] > half) --l;
  std::size_t r = peak;
  while (r + 1 < y.size() && y[r + 1] > half) ++r;
  if (l == 0 || r + 1 == y.size()) {
    throw Error(Errc::invalid_range, "delay density wider than the evaluation window");
  }
  // Half level lies between l-1 and l, and between r and r+1.
  const double left = static_cast<double>(l) - (y[l] - half) / (y[l] - y[l - 1]);
  const double right = static_cast<double>(r) + (y[r] - half) / (y[r] - y[r + 1]);
  return (right - left) * step;
}

}  // namespace

double phase_mismatch_length(double delta_nu_hz) {
  require_positive(delta_nu_hz, "frequency difference");
  return kConstants.c / (2.0 * delta_nu_hz);
}

double overlap_length(double angle_rad, double mode_diameter_m, double threshold,
                      OverlapConvention convention) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(Errc::invalid_threshold, "overlap threshold must lie in (0, 1)");
  }
  require_positive(mode_diameter_m, "mode diameter");
  if (!(angle_rad > 0.0 && angle_rad < std::numbers::pi / 2)) {
    throw Error(Errc::nonpositive_input, "angle must lie in (0, pi/2)");
  }
  const double w = mode_diameter_m / 2.0;
  const double ln = std::log(1.0 / threshold);
  const double d = convention == OverlapConvention::amplitude ? w * std::sqrt(2.0 * ln)
                                                              : w * std::sqrt(ln);
  return d / (2.0 * std::tan(angle_rad / 2.0));
}

double doppler_sigma(double temperature_k) {
  require_positive(temperature_k, "temperature");
  return std::sqrt(kConstants.kB * temperature_k / kConstants.m_rb87) / kConstants.lambda_d1;
}

double doppler_temperature(double sigma_hz) {
  require_positive(sigma_hz, "Doppler width");
  const double v = sigma_hz * kConstants.lambda_d1;
  return v * v * kConstants.m_rb87 / kConstants.kB;
}

double spinwave_coherence_time(double angle_rad, double temperature_k) {
  require_positive(temperature_k, "temperature");
  if (!(angle_rad > 0.0 && angle_rad <= std::numbers::pi / 2)) {
    throw Error(Errc::nonpositive_input, "angle must lie in (0, pi/2]");
  }
  const double k = 2.0 * std::numbers::pi / kConstants.lambda_d1;
  const double dk = 2.0 * k * std::sin(angle_rad / 2.0);
  const double vp = std::sqrt(2.0 * kConstants.kB * temperature_k / kConstants.m_rb87);
  return 1.0 / (dk * vp);
}

double filter_time_constant_ps(const FilterParams& f) {
  require_positive(f.fwhm_ghz, "filter linewidth");
  if (std::isinf(f.fwhm_ghz)) return 0.0;
  return 1e12 / (2.0 * std::numbers::pi * f.fwhm_ghz * 1e9);
}

double predicted_cross_fwhm(const FilterParams& filter_s, const FilterParams& filter_as,
                            std::span<const double> jitter_fwhm_ps, double intrinsic_tau_ps,
                            double step_ps) {
  require_positive(step_ps, "grid step");
  if (intrinsic_tau_ps < 0.0) throw Error(Errc::nonpositive_input, "negative intrinsic decay");
  const double range = 20'000.0;
  const auto half = static_cast<std::size_t>(std::llround(range / step_ps));
  std::vector<double> y(2 * half + 1, 0.0);
  y[half] = 1.0;
  exponential_smear(y, intrinsic_tau_ps, step_ps, true);
  exponential_smear(y, filter_time_constant_ps(filter_as), step_ps, true);
  exponential_smear(y, filter_time_constant_ps(filter_s), step_ps, false);
  // Independent Gaussians add in quadrature.
  double var = 0.0;
  for (double j : jitter_fwhm_ps) {
    if (j < 0.0) throw Error(Errc::nonpositive_input, "negative jitter");
    const double s = j / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
    var += s * s;
  }
  gaussian_smear(y, std::sqrt(var), step_ps);
  return fwhm_of(y, step_ps) * 1e-12;
}

double theoretical_conditional_g2(double g2_asas_0, double g2_sas_0) {
  require_positive(g2_sas_0, "g2_SAS(0)");
  return 2.0 * g2_asas_0 / g2_sas_0;
}

double rate_in_bandwidth(double pair_rate_hz, double source_bandwidth_hz,
                         double target_bandwidth_hz) {
  require_positive(source_bandwidth_hz, "source bandwidth");
  require_positive(target_bandwidth_hz, "target bandwidth");
  if (target_bandwidth_hz > source_bandwidth_hz) {
    throw Error(Errc::target_exceeds_source, "target bandwidth exceeds the source bandwidth");
  }
  return pair_rate_hz * target_bandwidth_hz / source_bandwidth_hz;
}

double etalon_finesse(double fsr_hz, double fwhm_hz) {
  require_positive(fsr_hz, "free spectral range");
  require_positive(fwhm_hz, "linewidth");
  return fsr_hz / fwhm_hz;
}

}  // namespace pairsim
