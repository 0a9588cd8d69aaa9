#pragma once

#include "pairsim/correlator.hpp"

namespace pairsim {

/// Reference O(N_a * N_b) pair-delay histogram. Shares no code with
/// CrossCorrelator: bins come from floating-point rounding of tau / width.
/// With exclude_self, pairs (i, i) are skipped (a and b are one record).
CorrelationHistogram brute_force_histogram(const TimeTagStream& a, const TimeTagStream& b,
                                           Picoseconds bin_width_ps, Picoseconds tau_min_ps,
                                           Picoseconds tau_max_ps, bool exclude_self);

}  // namespace pairsim
