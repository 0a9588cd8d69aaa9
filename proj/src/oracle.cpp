#include "pairsim/oracle.hpp"

#include <cmath>

namespace pairsim {
namespace {

// Nearest multiple of the width; exact halves go toward zero.
long long nearest_bin(long long tau, long long width) {
  const long double x = std::fabs(static_cast<long double>(tau) / static_cast<long double>(width));
  const long long k = static_cast<long long>(std::ceil(x - 0.5L));
  return tau < 0 ? -k : k;
}

}  // namespace

CorrelationHistogram brute_force_histogram(const TimeTagStream& a, const TimeTagStream& b,
                                           Picoseconds bin_width_ps, Picoseconds tau_min_ps,
                                           Picoseconds tau_max_ps, bool exclude_self) {
  const long long k_lo = nearest_bin(tau_min_ps, bin_width_ps);
  const long long k_hi = nearest_bin(tau_max_ps - 1, bin_width_ps);
  CorrelationHistogram h;
  h.bin_width_ps = bin_width_ps;
  h.tau_min_ps = tau_min_ps;
  h.tau_max_ps = tau_max_ps;
  h.counts.assign(static_cast<std::size_t>(k_hi - k_lo + 1), 0);
  h.n_a = a.size();
  h.n_b = b.size();
  h.duration_ps = a.duration_ps();
  // Loose integer bounds: a delay outside them cannot round into the grid.
  const long long lo = (k_lo - 1) * bin_width_ps;
  const long long hi = (k_hi + 1) * bin_width_ps;
  const auto ta = a.tags();
  const auto tb = b.tags();
  for (std::size_t i = 0; i < ta.size(); ++i) {
    for (std::size_t j = 0; j < tb.size(); ++j) {
      if (exclude_self && i == j) continue;
      const long long tau = static_cast<long long>(tb[j]) - static_cast<long long>(ta[i]);
      if (tau < lo || tau > hi) continue;
      const long long k = nearest_bin(tau, bin_width_ps);
      if (k >= k_lo && k <= k_hi) ++h.counts[static_cast<std::size_t>(k - k_lo)];
    }
  }
  return h;
}

}  // namespace pairsim
