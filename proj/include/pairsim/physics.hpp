#pragma once

#include <span>

namespace pairsim {

/// SI values. The 87Rb mass is 86.909180527 u.
struct PhysicalConstants {
  double c = 299'792'458.0;             // m/s
  double kB = 1.380649e-23;             // J/K
  double m_rb87 = 86.909180527 * 1.66053906660e-27;  // kg
  double lambda_d1 = 794.98e-9;         // m
  double delta_hf = 6.8e9;              // Hz, ground-state hyperfine splitting
  double delta_nu_sas = 13.6e9;         // Hz, Stokes / anti-Stokes separation
};

inline constexpr PhysicalConstants kConstants{};

/// Length c / (2 dnu) over which the S/AS wave-vector mismatch reaches pi.
/// Throws nonpositive_input.
double phase_mismatch_length(double delta_nu_hz);

/// How the overlap of two displaced Gaussian modes is measured.
enum class OverlapConvention {
  amplitude,  // exp(-d^2 / (2 w^2)), field overlap integral
  intensity,  // exp(-d^2 / w^2), squared field overlap
};

/// Half-length L of the region where two identical Gaussian modes crossing at
/// angle_rad overlap by more than threshold. mode_diameter_m is the 1/e^2
/// intensity diameter 2w; the modes are displaced by 2 L tan(angle/2) at
/// distance L from the crossing. Throws invalid_threshold, nonpositive_input.
double overlap_length(double angle_rad, double mode_diameter_m, double threshold,
                      OverlapConvention convention = OverlapConvention::amplitude);

/// One-sigma Doppler width sqrt(kB T / m) / lambda in Hz. Throws nonpositive_input.
double doppler_sigma(double temperature_k);

/// Temperature at which doppler_sigma returns sigma_hz.
double doppler_temperature(double sigma_hz);

/// Spin-wave dephasing time 1 / (dk v_p), dk = 2 k sin(angle/2), with v_p the
/// most probable speed sqrt(2 kB T / m). Only ratios are meaningful; the
/// absolute prefactor depends on the velocity convention. Throws nonpositive_input.
double spinwave_coherence_time(double angle_rad, double temperature_k);

/// Filter seen by the correlation: Lorentzian linewidth and peak transmission.
struct FilterParams {
  double fwhm_ghz = 0.6;
  double peak_transmission = 0.68;
};

/// Intensity decay time 1 / (2 pi fwhm) of a Lorentzian filter, in ps.
/// Returns 0 for an infinitely wide filter.
double filter_time_constant_ps(const FilterParams& f);

/// FWHM in seconds of the S->AS delay density: the intrinsic exponential and
/// the AS filter exponential delay AS, the S filter exponential delays S, and
/// each detector adds Gaussian jitter. Evaluated numerically on a grid of
/// step_ps over +-20 ns. Zero widths are skipped.
double predicted_cross_fwhm(const FilterParams& filter_s, const FilterParams& filter_as,
                            std::span<const double> jitter_fwhm_ps, double intrinsic_tau_ps,
                            double step_ps = 1.0);

/// g2_C(0) = 2 g2_ASAS(0) / g2_SAS(0). Throws nonpositive_input.
double theoretical_conditional_g2(double g2_asas_0, double g2_sas_0);

/// Pair rate scaled linearly to a narrower bandwidth. Throws nonpositive_input
/// or target_exceeds_source.
double rate_in_bandwidth(double pair_rate_hz, double source_bandwidth_hz,
                         double target_bandwidth_hz);

/// Finesse FSR / linewidth of an etalon. Throws nonpositive_input.
double etalon_finesse(double fsr_hz, double fwhm_hz);

}  // namespace pairsim
