#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pairsim/error.hpp"
#include "pairsim/physics.hpp"

using namespace pairsim;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::bad_args;
}

const FilterParams kFp{0.6, 0.68};
const FilterParams kOpen{std::numeric_limits<double>::infinity(), 1.0};

}  // namespace

TEST_CASE("constants") {
  CHECK(kConstants.delta_nu_sas == 2 * kConstants.delta_hf);
  CHECK(kConstants.m_rb87 == doctest::Approx(1.443160648e-25).epsilon(1e-8));
}

TEST_CASE("phase mismatch length") {
  CHECK(phase_mismatch_length(13.6e9) == doctest::Approx(0.0110218).epsilon(1e-5));
  CHECK(phase_mismatch_length(6.8e9) == doctest::Approx(2 * phase_mismatch_length(13.6e9)));
  const double d = phase_mismatch_length(13.6e9);
  CHECK(kConstants.c / (2 * d) == doctest::Approx(13.6e9).epsilon(1e-14));
  CHECK(code_of([] { phase_mismatch_length(0); }) == Errc::nonpositive_input);
}

TEST_CASE("overlap length") {
  const double L = overlap_length(2.3 * kDeg, 0.3e-3, 0.5);
  CHECK(std::abs(L - 3.8e-3) <= 0.3 * 3.8e-3);
  // Independent closed form: w sqrt(2 ln 2) / angle in the small-angle limit.
  CHECK(L == doctest::Approx(0.15e-3 * std::sqrt(2 * std::log(2.0)) / (2.3 * kDeg)).epsilon(1e-3));
  CHECK(overlap_length(2.3 * kDeg, 0.3e-3, 0.5, OverlapConvention::intensity) ==
        doctest::Approx(L / std::sqrt(2.0)));
  CHECK(overlap_length(2.3 * kDeg, 0.3e-3, 0.999999) < 1e-5);
  CHECK(overlap_length(1.15 * kDeg, 0.3e-3, 0.5) == doctest::Approx(2 * L).epsilon(1e-3));
  CHECK(code_of([] { overlap_length(0.04, 3e-4, 1.0); }) == Errc::invalid_threshold);
  CHECK(code_of([] { overlap_length(0.04, 3e-4, 0.0); }) == Errc::invalid_threshold);
}

TEST_CASE("Doppler width") {
  CHECK(doppler_sigma(300) == doctest::Approx(2.131e8).epsilon(1e-3));
  const double T = doppler_temperature(230e6);
  CHECK(T > 340);
  CHECK(T < 360);
  CHECK(doppler_sigma(T) == doctest::Approx(230e6).epsilon(1e-12));
  CHECK(doppler_sigma(1200) == doctest::Approx(2 * doppler_sigma(300)).epsilon(1e-14));
  CHECK(code_of([] { doppler_sigma(-1); }) == Errc::nonpositive_input);
}

TEST_CASE("spin-wave coherence time") {
  const double ratio = spinwave_coherence_time(90 * kDeg, 300) /
                       spinwave_coherence_time(2 * kDeg, 300);
  CHECK(ratio == doctest::Approx(std::sin(1 * kDeg) / std::sin(45 * kDeg)).epsilon(1e-12));
  CHECK(1.0 / ratio == doctest::Approx(40.5).epsilon(0.01));
  CHECK(spinwave_coherence_time(0.3, 1200) ==
        doctest::Approx(spinwave_coherence_time(0.3, 300) / 2).epsilon(1e-14));
  CHECK(spinwave_coherence_time(1e-12, 300) > 100.0);
  CHECK(code_of([] { spinwave_coherence_time(0, 300); }) == Errc::nonpositive_input);
}

TEST_CASE("filter time constant") {
  CHECK(filter_time_constant_ps(kFp) == doctest::Approx(265.258).epsilon(1e-4));
  CHECK(filter_time_constant_ps(kOpen) == 0.0);
}

TEST_CASE("predicted cross-correlation width") {
  const double j1[] = {350};
  CHECK(predicted_cross_fwhm(kOpen, kOpen, j1, 0) * 1e12 == doctest::Approx(350).epsilon(0.005));
  const double j2[] = {350, 350};
  CHECK(predicted_cross_fwhm(kOpen, kOpen, j2, 0) * 1e12 ==
        doctest::Approx(350 * std::sqrt(2.0)).epsilon(0.005));

  // Pure exponential: FWHM of exp(-t/tau) for t>0 has no crossing on the left
  // flank, so combine with a narrow Gaussian and compare to tau ln 2 loosely.
  const double narrow[] = {5};
  CHECK(predicted_cross_fwhm(kOpen, kOpen, narrow, 1000) * 1e12 ==
        doctest::Approx(1000 * std::log(2.0)).epsilon(0.02));

  const double fwhm = predicted_cross_fwhm(kFp, kFp, j2, 700);
  CHECK(std::abs(fwhm - 1.3e-9) <= 0.2e-9);

  // Halving the grid step changes the result by far less than a picosecond.
  CHECK(std::abs(predicted_cross_fwhm(kFp, kFp, j2, 700, 0.5) - fwhm) < 1e-12);
}

TEST_CASE("predicted width is monotone in every input") {
  const double base_j[] = {350, 350};
  const double ref = predicted_cross_fwhm(kFp, kFp, base_j, 700);
  for (double scale : {1.1, 1.5, 2.0}) {
    const FilterParams narrower{0.6 / scale, 0.68};
    CHECK(predicted_cross_fwhm(narrower, kFp, base_j, 700) >= ref);
    CHECK(predicted_cross_fwhm(kFp, narrower, base_j, 700) >= ref);
    const double j_a[] = {350 * scale, 350};
    const double j_b[] = {350, 350 * scale};
    CHECK(predicted_cross_fwhm(kFp, kFp, j_a, 700) >= ref);
    CHECK(predicted_cross_fwhm(kFp, kFp, j_b, 700) >= ref);
    CHECK(predicted_cross_fwhm(kFp, kFp, base_j, 700 * scale) >= ref);
  }
}

TEST_CASE("theoretical conditional g2") {
  CHECK(theoretical_conditional_g2(1.649, 6.984) == doctest::Approx(0.4722).epsilon(1e-3));
  CHECK(theoretical_conditional_g2(1, 2) == 1.0);
  CHECK(theoretical_conditional_g2(2, 4) == 1.0);
  CHECK(code_of([] { theoretical_conditional_g2(1, 0); }) == Errc::nonpositive_input);
}

TEST_CASE("rate in bandwidth") {
  const double source = 7224.0 / 9.4;
  CHECK(source == doctest::Approx(769e6 / 1e6).epsilon(1e-3));
  CHECK(rate_in_bandwidth(7224, 769e6, 1e6) == doctest::Approx(9.4).epsilon(0.001));
  CHECK(rate_in_bandwidth(7224, 769e6, 769e6) == 7224);
  CHECK(180.0 * 40.0 == doctest::Approx(7224).epsilon(0.01));
  CHECK(code_of([] { rate_in_bandwidth(1, 1e6, 2e6); }) == Errc::target_exceeds_source);
  CHECK(code_of([] { rate_in_bandwidth(1, 0, 0); }) == Errc::nonpositive_input);
}

TEST_CASE("unit rescaling leaves results unchanged") {
  // Hz <-> GHz: a frequency given in GHz and converted gives the same length.
  CHECK(phase_mismatch_length(13.6 * 1e9) == phase_mismatch_length(13.6e9));
  // Ratio-only quantities are unit free.
  CHECK(rate_in_bandwidth(7224, 0.769, 0.001) == doctest::Approx(rate_in_bandwidth(7224, 769e6, 1e6)));
  CHECK(theoretical_conditional_g2(1.649, 6.984) ==
        theoretical_conditional_g2(1.649 * 1, 6.984 * 1));
  // Time rescaling: every width times k (filter linewidths divided by k) and a
  // grid step times k scales the predicted width by exactly k.
  const double k = 2.0;
  const double j_ps[] = {350, 350};
  const double j_k[] = {350 * k, 350 * k};
  const FilterParams slow{0.6 / k, 0.68};
  CHECK(predicted_cross_fwhm(slow, slow, j_k, 700 * k, k) ==
        doctest::Approx(k * predicted_cross_fwhm(kFp, kFp, j_ps, 700)).epsilon(1e-9));
  CHECK(doppler_sigma(300) / 1e9 == doctest::Approx(0.2131).epsilon(1e-3));
}

TEST_CASE("etalon finesse") {
  CHECK(etalon_finesse(30e9, 0.6e9) == doctest::Approx(50));
  CHECK(code_of([] { etalon_finesse(30e9, 0); }) == Errc::nonpositive_input);
}
